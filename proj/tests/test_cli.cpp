#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "segsalsa/cli.hpp"
#include "segsalsa/hsio.hpp"
#include "segsalsa/solver.hpp"

using namespace segsalsa;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "segsalsa");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("segsalsa_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

/// Small noisy scene with a training sample and a trained model.
void prepare(const Workspace& ws, const std::string& noise) {
    REQUIRE(call({"synth", "--height", "16", "--width", "16", "--classes", "3", "--noise", noise,
                  "--seed", "3", "--out-cube", ws / "cube.hsc", "--out-truth", ws / "truth.csv"})
                .code == 0);
    REQUIRE(call({"sample", "--truth", ws / "truth.csv", "--like", ws / "cube.hsc", "--per-class", "10",
                  "--seed", "3", "--out", ws / "train.csv"})
                .code == 0);
    REQUIRE(call({"train", "--cube", ws / "cube.hsc", "--labels", ws / "train.csv", "--out",
                  ws / "model.json"})
                .code == 0);
}

} // namespace

TEST_CASE("train") {
    const Workspace ws;
    prepare(ws, "0.5");
    CHECK(fs::exists(ws / "model.json"));

    const Result missing = call({"train", "--labels", ws / "train.csv", "--out", ws / "m2.json"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("usage error") != std::string::npos);

    std::ofstream(ws / "bad.csv") << "0,0,1\n0,16,2\n";
    const Result outside = call({"train", "--cube", ws / "cube.hsc", "--labels", ws / "bad.csv", "--out",
                                 ws / "m3.json"});
    CHECK(outside.code == 1);
    CHECK(outside.err.find("line 2") != std::string::npos);
    CHECK_FALSE(fs::exists(ws / "m3.json"));
}

TEST_CASE("segment") {
    const Workspace ws;
    prepare(ws, "1.0");
    REQUIRE(call({"predict", "--cube", ws / "cube.hsc", "--model", ws / "model.json", "--out",
                  ws / "probs.hsp"})
                .code == 0);

    SUBCASE("even patch") {
        CHECK(call({"segment", "--probs", ws / "probs.hsp", "--patch", "4", "--out-labels", ws / "l.csv"})
                  .code == 2);
        CHECK_FALSE(fs::exists(ws / "l.csv"));
    }
    SUBCASE("schatten order") {
        CHECK(call({"segment", "--probs", ws / "probs.hsp", "--p", "3", "--out-labels", ws / "l.csv"}).code ==
              2);
    }
    SUBCASE("conflicting inputs") {
        CHECK(call({"segment", "--probs", ws / "probs.hsp", "--cube", ws / "cube.hsc", "--out-labels",
                    ws / "l.csv"})
                  .code == 2);
        CHECK(call({"segment", "--cube", ws / "cube.hsc", "--out-labels", ws / "l.csv"}).code == 2);
    }
    SUBCASE("lambda zero gives the argmax") {
        REQUIRE(call({"segment", "--probs", ws / "probs.hsp", "--lambda", "0", "--out-labels",
                      ws / "l.csv"})
                    .code == 0);
        const ProbabilityMap probs = hsio::read_probs(fs::path(ws / "probs.hsp"));
        const LabelMap argmax = extract_labels(HiddenField(probs.grid(), probs.values()));
        CHECK(hsio::read_labels(fs::path(ws / "l.csv"), probs.grid()) == argmax);
    }
    SUBCASE("outputs, manifest and reproducibility") {
        const std::vector<std::string> args{"segment", "--cube", ws / "cube.hsc", "--model", ws / "model.json",
                                            "--patch", "3", "--iters", "40", "--out-labels", ws / "a.csv",
                                            "--out-field", ws / "a.hsp", "--out-ppm", ws / "a.ppm",
                                            "--trace", ws / "a.trace.csv"};
        const Result r = call(args);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("iterations ") == 0);
        CHECK(r.out.find("relative primal residual") != std::string::npos);
        CHECK(r.out.find("relative dual residual") != std::string::npos);

        const auto manifest = nlohmann::json::parse(slurp(ws / "a.csv.manifest.json"));
        CHECK(manifest["patch"]["half_width"] == 1);
        CHECK(manifest["patch"]["gamma"] == 1.0);
        CHECK(manifest["solver"]["lambda"] == 2.0);
        CHECK(manifest["solver"]["mu"] == 1.0);
        CHECK(manifest["solver"]["schatten_p"] == 1);
        CHECK(manifest["solver"]["max_iters"] == 40);
        CHECK(manifest["inputs"]["model"] == ws / "model.json");

        const hsio::RasterHeader field = hsio::read_header(fs::path(ws / "a.hsp"));
        CHECK(field.planes == 3);
        CHECK(slurp(ws / "a.ppm").rfind("P6\n16 16\n255\n", 0) == 0);
        std::istringstream trace(slurp(ws / "a.trace.csv"));
        std::string line;
        int rows = 0;
        std::getline(trace, line);
        CHECK(line == "iteration,objective,relative_primal,relative_dual");
        while (std::getline(trace, line))
            ++rows;
        CHECK(rows == manifest["result"]["iterations"].get<int>());

        std::vector<std::string> again = args;
        for (auto& a : again)
            if (a.rfind(ws / "a.", 0) == 0)
                a = ws / ("b." + a.substr((ws / "a.").size()));
        REQUIRE(call(again).code == 0);
        CHECK(slurp(ws / "a.csv") == slurp(ws / "b.csv"));
        CHECK(slurp(ws / "a.hsp") == slurp(ws / "b.hsp"));
    }
}

TEST_CASE("evaluate") {
    const Workspace ws;
    std::ofstream(ws / "truth.csv") << "0,0,1\n0,1,2\n1,0,1\n1,1,2\n";
    std::ofstream(ws / "same.csv") << "0,0,1\n0,1,2\n1,0,1\n1,1,2\n";
    std::ofstream(ws / "half.csv") << "0,0,1\n0,1,1\n1,0,1\n1,1,1\n";
    std::ofstream(ws / "train.csv") << "0,1,2\n";
    std::ofstream(ws / "elsewhere.csv") << "1,1,0\n";

    Result r = call({"evaluate", "--pred", ws / "same.csv", "--truth", ws / "truth.csv"});
    CHECK(r.code == 0);
    CHECK(r.out == "100.00\n");
    r = call({"evaluate", "--pred", ws / "half.csv", "--truth", ws / "truth.csv"});
    CHECK(r.out == "50.00\n");
    r = call({"evaluate", "--pred", ws / "half.csv", "--truth", ws / "truth.csv", "--exclude", ws / "train.csv"});
    CHECK(r.out == "66.67\n");
    r = call({"evaluate", "--pred", ws / "half.csv", "--truth", ws / "truth.csv", "--exclude", ws / "train.csv",
              "--include-train"});
    CHECK(r.out == "50.00\n");
    r = call({"evaluate", "--pred", ws / "half.csv", "--truth", ws / "elsewhere.csv"});
    CHECK(r.code == 1);
}

TEST_CASE("synth") {
    const Workspace ws;
    CHECK(call({"synth", "--height", "8", "--width", "8", "--classes", "9", "--noise", "0", "--seed", "1",
                "--out-cube", ws / "c.hsc", "--out-truth", ws / "t.csv"})
              .code == 2);

    auto make = [&](const std::string& tag) {
        return call({"synth", "--height", "12", "--width", "10", "--classes", "4", "--noise", "0.7", "--seed",
                     "42", "--out-cube", ws / (tag + ".hsc"), "--out-truth", ws / (tag + ".csv")});
    };
    REQUIRE(make("x").code == 0);
    REQUIRE(make("y").code == 0);
    CHECK(slurp(ws / "x.hsc") == slurp(ws / "y.hsc"));
    CHECK(slurp(ws / "x.csv") == slurp(ws / "y.csv"));
    const hsio::RasterHeader h = hsio::read_header(fs::path(ws / "x.hsc"));
    CHECK(h.grid == ImageGrid(12, 10));
}

TEST_CASE("noiseless pipeline classifies exactly") {
    const Workspace ws;
    prepare(ws, "0");
    REQUIRE(call({"segment", "--cube", ws / "cube.hsc", "--model", ws / "model.json", "--lambda", "0",
                  "--out-labels", ws / "seg.csv"})
                .code == 0);
    const Result r = call({"evaluate", "--pred", ws / "seg.csv", "--truth", ws / "truth.csv", "--exclude",
                           ws / "train.csv"});
    CHECK(r.code == 0);
    CHECK(r.out == "100.00\n");
}

TEST_CASE("render") {
    const Workspace ws;
    std::ofstream(ws / "l.csv") << "0,0,1\n1,2,2\n";
    REQUIRE(call({"render", "--labels", ws / "l.csv", "--out", ws / "l.ppm"}).code == 0);
    CHECK(slurp(ws / "l.ppm").rfind("P6\n3 2\n255\n", 0) == 0);
    CHECK(call({"render", "--out", ws / "x.ppm"}).code == 2);
}

TEST_CASE("usage") {
    CHECK(call({}).code == 2);
    CHECK(call({"nonsense"}).code == 2);
    const Result help = call({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("segment") != std::string::npos);
}

TEST_CASE("installed tool exit codes") {
    const Workspace ws;
    const std::string tool = SEGSALSA_TOOL_PATH;
    const std::string quiet = " > " + (ws / "o.txt") + " 2>&1";
    auto status = [](int raw) {
#ifdef _WIN32
        return raw;
#else
        return WEXITSTATUS(raw);
#endif
    };
    CHECK(status(std::system((tool + " train --labels x.csv --out m.json" + quiet).c_str())) == 2);
    CHECK(status(std::system((tool + " train --cube " + (ws / "absent.hsc") + " --labels x.csv --out m.json" +
                              quiet)
                                 .c_str())) == 1);
    CHECK(status(std::system((tool + " --help" + quiet).c_str())) == 0);
}
