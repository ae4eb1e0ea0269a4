#include "segsalsa/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace segsalsa {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::DegenerateLikelihood: return "degenerate-likelihood";
    case ErrorKind::InfeasibleEvaluation: return "infeasible-evaluation";
    case ErrorKind::InvalidTrainingSet: return "invalid-training-set";
    case ErrorKind::MagicMismatch: return "magic-mismatch";
    case ErrorKind::InvalidHeader: return "invalid-header";
    case ErrorKind::TruncatedFile: return "truncated-file";
    case ErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ErrorKind::MalformedFile: return "malformed-file";
    case ErrorKind::EmptyEvaluation: return "empty-evaluation";
    case ErrorKind::PaletteExhausted: return "palette-exhausted";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

ImageGrid::ImageGrid(Index h, Index w) : height(h), width(w) {
    if (h < 1 || w < 1)
        throw Error(ErrorKind::InvalidParameter,
                    "grid must be at least 1x1, got " + std::to_string(h) + "x" + std::to_string(w));
}

namespace {

void check_columns(const ImageGrid& grid, const Matrix& values, const char* what) {
    if (values.cols() != grid.size())
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + " has " + std::to_string(values.cols()) +
                        " columns for a grid of " + std::to_string(grid.size()) + " pixels");
    if (values.rows() < 1)
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has no rows");
}

} // namespace

HyperCube::HyperCube(ImageGrid grid, Matrix values) : grid_(grid), values_(std::move(values)) {
    check_columns(grid_, values_, "hypercube");
    if (!values_.allFinite())
        throw Error(ErrorKind::InvalidParameter, "hypercube contains non-finite values");
}

ProbabilityMap::ProbabilityMap(ImageGrid grid, Matrix values)
    : grid_(grid), values_(std::move(values)) {
    check_columns(grid_, values_, "probability map");
    if (!values_.allFinite())
        throw Error(ErrorKind::InvalidParameter, "probability map contains non-finite values");
    for (Index i = 0; i < values_.cols(); ++i) {
        if ((values_.col(i).array() < 0.0).any())
            throw Error(ErrorKind::InvalidParameter,
                        "negative probability at pixel " + std::to_string(i));
        if (!(values_.col(i).array() > 0.0).any())
            throw Error(ErrorKind::DegenerateLikelihood,
                        "pixel " + std::to_string(i) + " has zero likelihood under every class");
    }
}

HiddenField::HiddenField(ImageGrid grid, Matrix values) : grid_(grid), values_(std::move(values)) {
    check_columns(grid_, values_, "hidden field");
}

double HiddenField::feasibility_error() const {
    double worst = 0.0;
    for (Index i = 0; i < values_.cols(); ++i) {
        worst = std::max(worst, -values_.col(i).minCoeff());
        worst = std::max(worst, std::abs(values_.col(i).sum() - 1.0));
    }
    return worst;
}

LabelMap::LabelMap(ImageGrid grid)
    : grid_(grid), labels_(static_cast<std::size_t>(grid.size()), 0) {}

LabelMap::LabelMap(ImageGrid grid, std::vector<Label> labels)
    : grid_(grid), labels_(std::move(labels)) {
    if (static_cast<Index>(labels_.size()) != grid_.size())
        throw Error(ErrorKind::DimensionMismatch, "label count does not match grid");
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] < 0)
            throw Error(ErrorKind::InvalidParameter,
                        "negative label at pixel " + std::to_string(i));
}

void LabelMap::set(Index pixel, Label label) {
    if (pixel < 0 || pixel >= grid_.size())
        throw Error(ErrorKind::IndexOutOfRange, "pixel " + std::to_string(pixel));
    if (label < 0)
        throw Error(ErrorKind::InvalidParameter, "negative label");
    labels_[static_cast<std::size_t>(pixel)] = label;
}

LabelMap::Label LabelMap::max_label() const {
    return labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

PatchConfig::PatchConfig(int half_width, double bandwidth)
    : half_width_(half_width), bandwidth_(bandwidth) {
    if (half_width < 0)
        throw Error(ErrorKind::InvalidParameter, "patch half-width must be >= 0");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw Error(ErrorKind::InvalidParameter, "patch bandwidth must be positive");
    const double two_gamma_sq = 2.0 * bandwidth * bandwidth;
    for (int dr = -half_width; dr <= half_width; ++dr) {
        for (int dc = -half_width; dc <= half_width; ++dc) {
            shifts_.push_back({dr, dc});
            weights_.push_back(std::exp(-static_cast<double>(dr * dr + dc * dc) / two_gamma_sq));
        }
    }
}

double PatchConfig::weight_energy() const {
    double sum = 0.0;
    for (double w : weights_)
        sum += w * w;
    return sum;
}

double default_gamma(int half_width) {
    if (half_width < 0)
        throw Error(ErrorKind::InvalidParameter, "patch half-width must be >= 0");
    return half_width == 0 ? 1.0 : static_cast<double>(half_width);
}

PatchConfig build_patch_config(int half_width, double bandwidth) {
    return PatchConfig(half_width, bandwidth);
}

} // namespace segsalsa
