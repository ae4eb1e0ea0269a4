#include "segsalsa/hsio.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace segsalsa::hsio {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMaxHeaderBytes = 4096;

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out)
        throw Error(ErrorKind::Io, "write failed for " + path.string());
}

const char* plane_key(const std::string& magic) {
    return magic == kCubeMagic ? "bands" : "classes";
}

Index header_dimension(const ordered_json& header, const char* key) {
    const auto it = header.find(key);
    if (it == header.end() || !it->is_number_integer())
        throw Error(ErrorKind::InvalidHeader, std::string("missing integer field \"") + key + "\"");
    const auto value = it->get<std::int64_t>();
    if (value < 1)
        throw Error(ErrorKind::InvalidHeader,
                    std::string("field \"") + key + "\" must be >= 1, got " + std::to_string(value));
    return static_cast<Index>(value);
}

RasterHeader parse_header(std::istream& in, const std::string& expected_magic) {
    std::string line;
    for (;;) {
        const int ch = in.get();
        if (ch == std::char_traits<char>::eof())
            throw Error(ErrorKind::InvalidHeader,
                        "no newline terminating the header (read " + std::to_string(line.size()) +
                            " bytes)");
        if (ch == '\n')
            break;
        line.push_back(static_cast<char>(ch));
        if (line.size() > kMaxHeaderBytes)
            throw Error(ErrorKind::InvalidHeader,
                        "header exceeds " + std::to_string(kMaxHeaderBytes) + " bytes");
    }
    ordered_json header;
    try {
        header = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidHeader,
                    "header is not valid JSON near byte offset " + std::to_string(e.byte));
    }
    if (!header.is_object())
        throw Error(ErrorKind::InvalidHeader, "header at byte offset 0 is not a JSON object");
    const auto magic = header.find("magic");
    if (magic == header.end() || !magic->is_string())
        throw Error(ErrorKind::InvalidHeader, "header has no \"magic\" string");
    RasterHeader out;
    out.magic = magic->get<std::string>();
    if (!expected_magic.empty() && out.magic != expected_magic)
        throw Error(ErrorKind::MagicMismatch,
                    "expected magic \"" + expected_magic + "\", found \"" + out.magic + "\"");
    if (out.magic != kCubeMagic && out.magic != kProbMagic)
        throw Error(ErrorKind::MagicMismatch, "unknown magic \"" + out.magic + "\"");
    const auto dtype = header.find("dtype");
    if (dtype == header.end() || *dtype != "f32")
        throw Error(ErrorKind::InvalidHeader, "dtype must be \"f32\"");
    const Index h = header_dimension(header, "height");
    const Index w = header_dimension(header, "width");
    out.planes = header_dimension(header, plane_key(out.magic));
    out.grid = ImageGrid(h, w);
    out.payload_offset = line.size() + 1;
    return out;
}

/// planes x n matrix from the band-major payload.
Matrix read_payload(std::istream& in, const RasterHeader& header) {
    const Index n = header.grid.size();
    const std::size_t count = static_cast<std::size_t>(header.planes * n);
    const std::size_t expected = 4 * count;
    std::vector<char> bytes(expected);
    in.read(bytes.data(), static_cast<std::streamsize>(expected));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != expected)
        throw Error(ErrorKind::TruncatedFile,
                    "payload ends at byte offset " + std::to_string(header.payload_offset + got) +
                        ", expected " + std::to_string(expected) + " payload bytes");
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(ErrorKind::MalformedFile,
                    "trailing data at byte offset " +
                        std::to_string(header.payload_offset + expected));
    Matrix values(header.planes, n);
    for (std::size_t v = 0; v < count; ++v) {
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + 4 * v);
        const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        const float f = std::bit_cast<float>(bits);
        if (!std::isfinite(f))
            throw Error(ErrorKind::MalformedFile,
                        "non-finite value at byte offset " +
                            std::to_string(header.payload_offset + 4 * v));
        const Index plane = static_cast<Index>(v) / n;
        const Index pixel = static_cast<Index>(v) % n;
        values(plane, pixel) = static_cast<double>(f);
    }
    return values;
}

void write_raster(std::ostream& out, const char* magic, const ImageGrid& grid,
                  const Matrix& values) {
    ordered_json header;
    header["magic"] = magic;
    header["height"] = grid.height;
    header["width"] = grid.width;
    header[plane_key(magic)] = values.rows();
    header["dtype"] = "f32";
    out << header.dump() << '\n';
    std::string payload;
    payload.reserve(static_cast<std::size_t>(4 * values.size()));
    for (Index plane = 0; plane < values.rows(); ++plane) {
        for (Index i = 0; i < values.cols(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values(plane, i)));
            for (int shift = 0; shift < 32; shift += 8)
                payload.push_back(static_cast<char>((bits >> shift) & 0xffu));
        }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

} // namespace

HyperCube read_cube(std::istream& in) {
    const RasterHeader header = parse_header(in, kCubeMagic);
    return HyperCube(header.grid, read_payload(in, header));
}

HyperCube read_cube(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_cube(in);
}

void write_cube(std::ostream& out, const HyperCube& cube) {
    write_raster(out, kCubeMagic, cube.grid(), cube.values());
}

void write_cube(const std::filesystem::path& path, const HyperCube& cube) {
    auto out = open_out(path);
    write_cube(out, cube);
    finish(out, path);
}

ProbabilityMap read_probs(std::istream& in) {
    const RasterHeader header = parse_header(in, kProbMagic);
    return ProbabilityMap(header.grid, read_payload(in, header));
}

ProbabilityMap read_probs(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_probs(in);
}

void write_probs(std::ostream& out, const ProbabilityMap& probs) {
    write_raster(out, kProbMagic, probs.grid(), probs.values());
}

void write_probs(const std::filesystem::path& path, const ProbabilityMap& probs) {
    auto out = open_out(path);
    write_probs(out, probs);
    finish(out, path);
}

void write_field(const std::filesystem::path& path, const HiddenField& field) {
    auto out = open_out(path);
    write_raster(out, kProbMagic, field.grid(), field.values());
    finish(out, path);
}

RasterHeader read_header(const std::filesystem::path& path) {
    auto in = open_in(path);
    return parse_header(in, "");
}

LabelMap read_labels(std::istream& in, std::optional<ImageGrid> grid) {
    struct Entry {
        Index row, col;
        LabelMap::Label label;
        std::size_t line;
    };
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::istringstream fields(line);
        long long row = 0, col = 0, label = 0;
        char c1 = 0, c2 = 0;
        fields >> row >> c1 >> col >> c2 >> label;
        if (!fields || c1 != ',' || c2 != ',' || !(fields >> std::ws).eof())
            throw Error(ErrorKind::MalformedFile,
                        "line " + std::to_string(line_no) + ": expected \"row,col,label\"");
        if (row < 0 || col < 0)
            throw Error(ErrorKind::IndexOutOfRange,
                        "line " + std::to_string(line_no) + ": negative pixel index");
        if (label < 1 || label > std::numeric_limits<LabelMap::Label>::max())
            throw Error(ErrorKind::MalformedFile,
                        "line " + std::to_string(line_no) + ": label must be >= 1");
        entries.push_back({static_cast<Index>(row), static_cast<Index>(col),
                           static_cast<LabelMap::Label>(label), line_no});
    }
    if (in.bad())
        throw Error(ErrorKind::Io, "read failure after line " + std::to_string(line_no));

    if (!grid) {
        if (entries.empty())
            throw Error(ErrorKind::MalformedFile, "label file is empty and no grid was given");
        Index h = 0, w = 0;
        for (const auto& e : entries) {
            h = std::max(h, e.row + 1);
            w = std::max(w, e.col + 1);
        }
        grid = ImageGrid(h, w);
    }
    LabelMap labels(*grid);
    for (const auto& e : entries) {
        if (e.row >= grid->height || e.col >= grid->width)
            throw Error(ErrorKind::IndexOutOfRange,
                        "line " + std::to_string(e.line) + ": pixel (" + std::to_string(e.row) +
                            "," + std::to_string(e.col) + ") outside " +
                            std::to_string(grid->height) + "x" + std::to_string(grid->width) +
                            " grid");
        const Index pixel = grid->index(e.row, e.col);
        if (labels[pixel] != 0)
            throw Error(ErrorKind::MalformedFile,
                        "line " + std::to_string(e.line) + ": pixel listed twice");
        labels.set(pixel, e.label);
    }
    return labels;
}

LabelMap read_labels(const std::filesystem::path& path, std::optional<ImageGrid> grid) {
    auto in = open_in(path);
    return read_labels(in, grid);
}

void write_labels(std::ostream& out, const LabelMap& labels) {
    const ImageGrid& grid = labels.grid();
    for (Index i = 0; i < grid.size(); ++i)
        if (labels[i] != 0)
            out << grid.row_of(i) << ',' << grid.col_of(i) << ',' << labels[i] << '\n';
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
    auto out = open_out(path);
    write_labels(out, labels);
    finish(out, path);
}

void write_model(const std::filesystem::path& path, const MlrModel& model) {
    ordered_json j;
    j["format"] = "segsalsa-mlr";
    j["classes"] = model.classes();
    j["bands"] = model.bands();
    j["ridge"] = model.ridge;
    j["feature_mean"] = std::vector<double>(model.feature_mean.begin(), model.feature_mean.end());
    j["feature_scale"] = std::vector<double>(model.feature_scale.begin(), model.feature_scale.end());
    auto rows = ordered_json::array();
    for (Index k = 0; k < model.weights.rows(); ++k) {
        const Vector row = model.weights.row(k).transpose();
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["weights"] = rows;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

MlrModel read_model(const std::filesystem::path& path) {
    auto in = open_in(path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedFile,
                    path.string() + ": invalid JSON near byte offset " + std::to_string(e.byte));
    }
    try {
        if (j.at("format") != "segsalsa-mlr")
            throw Error(ErrorKind::MagicMismatch, path.string() + ": not a segsalsa MLR model");
        const auto K = j.at("classes").get<Index>();
        const auto d = j.at("bands").get<Index>();
        if (K < 1 || d < 1)
            throw Error(ErrorKind::InvalidHeader, path.string() + ": classes and bands must be >= 1");
        MlrModel model;
        model.ridge = j.at("ridge").get<double>();
        const auto mean = j.at("feature_mean").get<std::vector<double>>();
        const auto scale = j.at("feature_scale").get<std::vector<double>>();
        const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
        if (static_cast<Index>(mean.size()) != d || static_cast<Index>(scale.size()) != d ||
            static_cast<Index>(rows.size()) != K)
            throw Error(ErrorKind::DimensionMismatch, path.string() + ": inconsistent model shapes");
        model.feature_mean = Eigen::Map<const Vector>(mean.data(), d);
        model.feature_scale = Eigen::Map<const Vector>(scale.data(), d);
        model.weights.resize(K, d + 1);
        for (Index k = 0; k < K; ++k) {
            const auto& row = rows[static_cast<std::size_t>(k)];
            if (static_cast<Index>(row.size()) != d + 1)
                throw Error(ErrorKind::DimensionMismatch,
                            path.string() + ": weight row " + std::to_string(k) + " has wrong length");
            for (Index c = 0; c <= d; ++c)
                model.weights(k, c) = row[static_cast<std::size_t>(c)];
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedFile, path.string() + ": " + e.what());
    }
}

const std::vector<Rgb>& default_palette() {
    static const std::vector<Rgb> palette = {
        Rgb{230, 25, 75},   Rgb{60, 180, 75},   Rgb{255, 225, 25},  Rgb{0, 130, 200},
        Rgb{245, 130, 48},  Rgb{145, 30, 180},  Rgb{70, 240, 240},  Rgb{240, 50, 230},
        Rgb{210, 245, 60},  Rgb{250, 190, 212}, Rgb{0, 128, 128},   Rgb{220, 190, 255},
        Rgb{170, 110, 40},  Rgb{255, 250, 200}, Rgb{128, 0, 0},     Rgb{170, 255, 195},
    };
    return palette;
}

std::string render_label_map(const LabelMap& labels, const std::vector<Rgb>& palette) {
    const ImageGrid& grid = labels.grid();
    const auto top = labels.max_label();
    if (static_cast<std::size_t>(top) > palette.size())
        throw Error(ErrorKind::PaletteExhausted,
                    "label " + std::to_string(top) + " exceeds palette of " +
                        std::to_string(palette.size()) + " colors");
    std::string out = "P6\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) +
                      "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(3 * grid.size()));
    for (Index i = 0; i < grid.size(); ++i) {
        const Rgb color = labels[i] == 0 ? Rgb{0, 0, 0}
                                         : palette[static_cast<std::size_t>(labels[i] - 1)];
        for (auto channel : color)
            out.push_back(static_cast<char>(channel));
    }
    return out;
}

std::string render_field_channel(const HiddenField& field, Index k) {
    if (k < 1 || k > field.classes())
        throw Error(ErrorKind::IndexOutOfRange,
                    "class " + std::to_string(k) + " outside 1.." + std::to_string(field.classes()));
    const ImageGrid& grid = field.grid();
    std::string out = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) +
                      "\n255\n";
    for (Index i = 0; i < grid.size(); ++i) {
        const double v = std::clamp(field.values()(k - 1, i), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.0 + 0.5))));
    }
    return out;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    auto out = open_out(path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    finish(out, path);
}

double overall_accuracy(const LabelMap& pred, const LabelMap& truth,
                        const std::vector<TrainingSample>& exclude) {
    if (!(pred.grid() == truth.grid()))
        throw Error(ErrorKind::DimensionMismatch, "prediction and truth grids differ");
    std::vector<char> skip(static_cast<std::size_t>(truth.grid().size()), 0);
    for (const auto& s : exclude) {
        if (s.pixel < 0 || s.pixel >= truth.grid().size())
            throw Error(ErrorKind::IndexOutOfRange, "excluded pixel outside grid");
        skip[static_cast<std::size_t>(s.pixel)] = 1;
    }
    std::size_t evaluated = 0, correct = 0;
    for (Index i = 0; i < truth.grid().size(); ++i) {
        if (truth[i] == 0 || skip[static_cast<std::size_t>(i)])
            continue;
        ++evaluated;
        if (pred[i] == truth[i])
            ++correct;
    }
    if (evaluated == 0)
        throw Error(ErrorKind::EmptyEvaluation, "no labeled pixels left to evaluate");
    return static_cast<double>(correct) / static_cast<double>(evaluated);
}

} // namespace segsalsa::hsio
