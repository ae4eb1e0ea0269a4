#include "segsalsa/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "segsalsa/class_models.hpp"
#include "segsalsa/hsio.hpp"
#include "segsalsa/solver.hpp"
#include "segsalsa/synth.hpp"

namespace segsalsa::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SynthOptions {
    Index height = 32;
    Index width = 32;
    int classes = 3;
    Index bands = 5;
    double noise = 1.0;
    std::uint64_t seed = 1;
    int cells = 0;
    std::string out_cube;
    std::string out_truth;
};

struct SampleOptions {
    std::string truth;
    std::string like;
    int per_class = 15;
    std::uint64_t seed = 1;
    std::string out;
};

struct TrainOptions {
    std::string cube;
    std::string labels;
    double ridge = 1e-3;
    int iters = 500;
    std::string out;
};

struct PredictOptions {
    std::string cube;
    std::string model;
    std::string out;
};

struct SegmentOptions {
    std::string probs;
    std::string cube;
    std::string model;
    int patch = 3;
    std::optional<double> gamma;
    double lambda = 2.0;
    double mu = 1.0;
    int p = 1;
    int iters = 200;
    bool fixed_iters = false;
    double tol = 1e-3;
    std::string out_labels;
    std::string out_field;
    std::string out_ppm;
    std::string manifest;
    std::string trace;
};

struct EvaluateOptions {
    std::string pred;
    std::string truth;
    std::string exclude;
    bool include_train = false;
};

struct RenderOptions {
    std::string labels;
    std::string like;
    std::string field;
    Index klass = 1;
    std::string out;
};

std::string format_fixed(double value, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << value;
    return os.str();
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    if (o.classes < 1 || o.classes > synth::kMaxClasses)
        throw UsageError("--classes must be in 1.." + std::to_string(synth::kMaxClasses));
    synth::SceneConfig cfg;
    cfg.height = o.height;
    cfg.width = o.width;
    cfg.classes = o.classes;
    cfg.bands = o.bands;
    cfg.noise = o.noise;
    cfg.seed = o.seed;
    cfg.cells = o.cells;
    const auto scene = synth::generate_scene(cfg);
    hsio::write_cube(fs::path(o.out_cube), scene.cube);
    hsio::write_labels(fs::path(o.out_truth), scene.truth);
    out << "wrote " << o.height << "x" << o.width << "x" << o.bands << " cube, " << o.classes
        << " classes\n";
    return kExitOk;
}

int cmd_sample(const SampleOptions& o, std::ostream& out) {
    const auto header = hsio::read_header(fs::path(o.like));
    const LabelMap truth = hsio::read_labels(fs::path(o.truth), header.grid);
    const TrainingSet set = synth::sample_training(truth, o.per_class, o.seed);
    LabelMap picked(header.grid);
    for (const auto& s : set.samples)
        picked.set(s.pixel, s.label);
    hsio::write_labels(fs::path(o.out), picked);
    out << "sampled " << set.samples.size() << " training pixels\n";
    return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
    const HyperCube cube = hsio::read_cube(fs::path(o.cube));
    const LabelMap labels = hsio::read_labels(fs::path(o.labels), cube.grid());
    const TrainingSet set = TrainingSet::from_labels(labels);
    const TrainResult result = train_mlr(cube, set, o.ridge, o.iters);
    hsio::write_model(fs::path(o.out), result.model);
    out << "trained " << result.model.classes() << "-class model on " << set.samples.size()
        << " samples, " << result.iterations << " iterations, loss "
        << format_fixed(result.loss_trace.back(), 6) << "\n";
    return kExitOk;
}

int cmd_predict(const PredictOptions& o, std::ostream& out) {
    const HyperCube cube = hsio::read_cube(fs::path(o.cube));
    const MlrModel model = hsio::read_model(fs::path(o.model));
    hsio::write_probs(fs::path(o.out), predict_probs(model, cube));
    out << "wrote " << model.classes() << "-class probability map\n";
    return kExitOk;
}

int cmd_segment(const SegmentOptions& o, int threads, std::ostream& out) {
    if (o.patch < 1 || o.patch % 2 == 0)
        throw UsageError("--patch must be an odd size >= 1, got " + std::to_string(o.patch));
    const bool from_probs = !o.probs.empty();
    if (from_probs == (!o.cube.empty() || !o.model.empty()))
        throw UsageError("give either --probs or both --cube and --model");
    if (!from_probs && (o.cube.empty() || o.model.empty()))
        throw UsageError("--cube and --model must be given together");
    if (o.p != 1 && o.p != 2)
        throw UsageError("--p must be 1 or 2");
    if (o.iters < 1)
        throw UsageError("--iters must be >= 1");

    const int half_width = (o.patch - 1) / 2;
    const double gamma = o.gamma.value_or(default_gamma(half_width));
    const PatchConfig patch = build_patch_config(half_width, gamma);

    SolverConfig cfg;
    cfg.lambda = o.lambda;
    cfg.mu = o.mu;
    cfg.schatten = schatten_order_from_int(o.p);
    cfg.max_iters = o.iters;
    if (o.fixed_iters)
        cfg.fixed_iters = o.iters;
    cfg.eps_primal = o.tol;
    cfg.eps_dual = o.tol;
    cfg.trace_objective = !o.trace.empty();

    const ProbabilityMap probs =
        from_probs ? hsio::read_probs(fs::path(o.probs))
                   : predict_probs(hsio::read_model(fs::path(o.model)), hsio::read_cube(fs::path(o.cube)));

    const auto [field, report] = run(probs, patch, cfg);
    const LabelMap labels = extract_labels(field);

    hsio::write_labels(fs::path(o.out_labels), labels);
    if (!o.out_field.empty())
        hsio::write_field(fs::path(o.out_field), field);
    if (!o.out_ppm.empty())
        hsio::write_bytes(fs::path(o.out_ppm), hsio::render_label_map(labels));
    if (!o.trace.empty()) {
        std::ofstream trace(o.trace);
        if (!trace)
            throw Error(ErrorKind::Io, "cannot open " + o.trace + " for writing");
        trace << "iteration,objective,relative_primal,relative_dual\n" << std::setprecision(17);
        for (std::size_t k = 0; k < report.primal_trace.size(); ++k)
            trace << k + 1 << ',' << report.objective_trace[k] << ',' << report.primal_trace[k]
                  << ',' << report.dual_trace[k] << '\n';
    }

    ordered_json manifest;
    manifest["tool"] = "segsalsa";
    manifest["command"] = "segment";
    manifest["inputs"] = {{"probs", o.probs}, {"cube", o.cube}, {"model", o.model}};
    manifest["grid"] = {{"height", probs.grid().height}, {"width", probs.grid().width},
                        {"classes", probs.classes()}};
    manifest["patch"] = {{"size", o.patch}, {"half_width", half_width}, {"gamma", gamma},
                         {"weights", patch.weights()}};
    manifest["solver"] = {{"lambda", cfg.lambda},
                          {"mu", cfg.mu},
                          {"schatten_p", o.p},
                          {"max_iters", cfg.max_iters},
                          {"fixed_iters", cfg.fixed_iters ? ordered_json(*cfg.fixed_iters) : ordered_json()},
                          {"eps_primal", cfg.eps_primal},
                          {"eps_dual", cfg.eps_dual}};
    manifest["threads"] = threads;
    manifest["outputs"] = {{"labels", o.out_labels}, {"field", o.out_field}, {"ppm", o.out_ppm},
                           {"trace", o.trace}};
    manifest["result"] = {{"iterations", report.iterations},
                          {"converged", report.converged},
                          {"relative_primal", report.relative_primal},
                          {"relative_dual", report.relative_dual}};
    const std::string manifest_path = o.manifest.empty() ? o.out_labels + ".manifest.json" : o.manifest;
    std::ofstream mf(manifest_path);
    if (!mf)
        throw Error(ErrorKind::Io, "cannot open " + manifest_path + " for writing");
    mf << manifest.dump(2) << '\n';

    out << "iterations " << report.iterations << (report.converged ? " (converged)" : " (not converged)")
        << "\nrelative primal residual " << std::scientific << std::setprecision(3)
        << report.relative_primal << "\nrelative dual residual " << report.relative_dual
        << std::defaultfloat << "\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const LabelMap pred = hsio::read_labels(fs::path(o.pred));
    const LabelMap truth = hsio::read_labels(fs::path(o.truth), pred.grid());
    std::vector<TrainingSample> exclude;
    if (!o.exclude.empty() && !o.include_train)
        exclude = TrainingSet::from_labels(hsio::read_labels(fs::path(o.exclude), pred.grid())).samples;
    out << format_fixed(100.0 * hsio::overall_accuracy(pred, truth, exclude), 2) << "\n";
    return kExitOk;
}

int cmd_render(const RenderOptions& o, std::ostream& out) {
    if (o.labels.empty() == o.field.empty())
        throw UsageError("give exactly one of --labels or --field");
    if (!o.labels.empty()) {
        std::optional<ImageGrid> grid;
        if (!o.like.empty())
            grid = hsio::read_header(fs::path(o.like)).grid;
        hsio::write_bytes(fs::path(o.out),
                          hsio::render_label_map(hsio::read_labels(fs::path(o.labels), grid)));
    } else {
        const ProbabilityMap stored = hsio::read_probs(fs::path(o.field));
        const HiddenField field(stored.grid(), stored.values());
        hsio::write_bytes(fs::path(o.out), hsio::render_field_channel(field, o.klass));
    }
    out << "wrote " << o.out << "\n";
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hidden-field segmentation with structure-tensor regularization", "segsalsa"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);

    SynthOptions synth_o;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic Voronoi scene");
    synth->add_option("--height", synth_o.height)->required()->check(CLI::PositiveNumber);
    synth->add_option("--width", synth_o.width)->required()->check(CLI::PositiveNumber);
    synth->add_option("--classes", synth_o.classes)->required();
    synth->add_option("--noise", synth_o.noise, "Feature noise standard deviation")->required()
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", synth_o.seed)->required();
    synth->add_option("--bands", synth_o.bands)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--cells", synth_o.cells, "Voronoi cells (0 = one per class)")->capture_default_str();
    synth->add_option("--out-cube", synth_o.out_cube)->required();
    synth->add_option("--out-truth", synth_o.out_truth)->required();

    SampleOptions sample_o;
    auto* sample = app.add_subcommand("sample", "Draw a per-class training set from ground truth");
    sample->add_option("--truth", sample_o.truth)->required();
    sample->add_option("--like", sample_o.like, "Cube or probability file defining the grid")->required();
    sample->add_option("--per-class", sample_o.per_class)->capture_default_str()->check(CLI::PositiveNumber);
    sample->add_option("--seed", sample_o.seed)->capture_default_str();
    sample->add_option("--out", sample_o.out)->required();

    TrainOptions train_o;
    auto* train = app.add_subcommand("train", "Fit the multinomial logistic regression");
    train->add_option("--cube", train_o.cube)->required();
    train->add_option("--labels", train_o.labels)->required();
    train->add_option("--ridge", train_o.ridge)->capture_default_str()->check(CLI::NonNegativeNumber);
    train->add_option("--iters", train_o.iters)->capture_default_str()->check(CLI::NonNegativeNumber);
    train->add_option("--out", train_o.out)->required();

    PredictOptions predict_o;
    auto* predict = app.add_subcommand("predict", "Write per-pixel class probabilities");
    predict->add_option("--cube", predict_o.cube)->required();
    predict->add_option("--model", predict_o.model)->required();
    predict->add_option("--out", predict_o.out)->required();

    SegmentOptions seg_o;
    auto* segment = app.add_subcommand("segment", "Run the SALSA segmentation");
    segment->add_option("--probs", seg_o.probs);
    segment->add_option("--cube", seg_o.cube);
    segment->add_option("--model", seg_o.model);
    segment->add_option("--patch", seg_o.patch, "Odd patch width P (P x P)")->capture_default_str();
    segment->add_option("--gamma", seg_o.gamma, "Gaussian bandwidth (default: (P-1)/2, 1 for P=1)");
    segment->add_option("--lambda", seg_o.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
    segment->add_option("--mu", seg_o.mu)->capture_default_str()->check(CLI::PositiveNumber);
    segment->add_option("--p", seg_o.p, "Schatten order (1 or 2)")->capture_default_str();
    segment->add_option("--iters", seg_o.iters, "Iteration cap")->capture_default_str();
    segment->add_flag("--fixed-iters", seg_o.fixed_iters, "Run exactly --iters sweeps");
    segment->add_option("--tol", seg_o.tol, "Relative primal/dual tolerance")->capture_default_str()
        ->check(CLI::PositiveNumber);
    segment->add_option("--out-labels", seg_o.out_labels)->required();
    segment->add_option("--out-field", seg_o.out_field, "Hidden field in probability-file framing");
    segment->add_option("--out-ppm", seg_o.out_ppm, "Rendered label map");
    segment->add_option("--manifest", seg_o.manifest, "Default: <out-labels>.manifest.json");
    segment->add_option("--trace", seg_o.trace, "Per-iteration objective/residual CSV");

    EvaluateOptions eval_o;
    auto* evaluate = app.add_subcommand("evaluate", "Overall accuracy in percent");
    evaluate->add_option("--pred", eval_o.pred)->required();
    evaluate->add_option("--truth", eval_o.truth)->required();
    evaluate->add_option("--exclude", eval_o.exclude, "Training pixels left out of the score");
    evaluate->add_flag("--include-train", eval_o.include_train, "Score the --exclude pixels too");

    RenderOptions render_o;
    auto* render = app.add_subcommand("render", "Render a label map (PPM) or field channel (PGM)");
    render->add_option("--labels", render_o.labels);
    render->add_option("--like", render_o.like, "Grid source for --labels");
    render->add_option("--field", render_o.field);
    render->add_option("--class", render_o.klass, "1-based class for --field")->capture_default_str();
    render->add_option("--out", render_o.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

#ifdef _OPENMP
    if (threads > 0)
        omp_set_num_threads(threads);
#endif

    try {
        if (synth->parsed())
            return cmd_synth(synth_o, out);
        if (sample->parsed())
            return cmd_sample(sample_o, out);
        if (train->parsed())
            return cmd_train(train_o, out);
        if (predict->parsed())
            return cmd_predict(predict_o, out);
        if (segment->parsed())
            return cmd_segment(seg_o, threads, out);
        if (evaluate->parsed())
            return cmd_evaluate(eval_o, out);
        if (render->parsed())
            return cmd_render(render_o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}

} // namespace segsalsa::cli
