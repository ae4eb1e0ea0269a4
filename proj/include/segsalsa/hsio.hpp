#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "segsalsa/class_models.hpp"
#include "segsalsa/tensor_field.hpp"

namespace segsalsa::hsio {

// Binary raster files: one JSON header line, then little-endian float32
// values, plane by plane (band or class), each plane in row-major order.
//
//   cube:  {"magic":"HSC1","height":H,"width":W,"bands":d,"dtype":"f32"}\n
//   probs: {"magic":"HSP1","height":H,"width":W,"classes":K,"dtype":"f32"}\n

inline constexpr const char* kCubeMagic = "HSC1";
inline constexpr const char* kProbMagic = "HSP1";

struct RasterHeader {
    std::string magic;
    ImageGrid grid;
    Index planes = 0;
    /// Byte offset of the first payload value.
    std::size_t payload_offset = 0;
};

HyperCube read_cube(std::istream& in);
HyperCube read_cube(const std::filesystem::path& path);
void write_cube(std::ostream& out, const HyperCube& cube);
void write_cube(const std::filesystem::path& path, const HyperCube& cube);

ProbabilityMap read_probs(std::istream& in);
ProbabilityMap read_probs(const std::filesystem::path& path);
void write_probs(std::ostream& out, const ProbabilityMap& probs);
void write_probs(const std::filesystem::path& path, const ProbabilityMap& probs);

/// Writes a hidden field with the probability-file framing.
void write_field(const std::filesystem::path& path, const HiddenField& field);

/// Header of either raster kind, without reading the payload.
RasterHeader read_header(const std::filesystem::path& path);

/// CSV lines "row,col,label" with 0-based row/col and label >= 1. Pixels not
/// listed are unlabeled. Without a grid, the grid is the bounding extent of
/// the listed pixels.
LabelMap read_labels(std::istream& in, std::optional<ImageGrid> grid = std::nullopt);
LabelMap read_labels(const std::filesystem::path& path,
                     std::optional<ImageGrid> grid = std::nullopt);
void write_labels(std::ostream& out, const LabelMap& labels);
void write_labels(const std::filesystem::path& path, const LabelMap& labels);

void write_model(const std::filesystem::path& path, const MlrModel& model);
MlrModel read_model(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// 16 distinct colors for labels 1..16; label 0 is always black.
const std::vector<Rgb>& default_palette();

/// Binary PPM (P6).
std::string render_label_map(const LabelMap& labels,
                             const std::vector<Rgb>& palette = default_palette());

/// Binary PGM (P5) of class `k` (1-based), [0, 1] mapped to [0, 255] with
/// round-half-up.
std::string render_field_channel(const HiddenField& field, Index k);

void write_bytes(const std::filesystem::path& path, const std::string& bytes);

/// Fraction of pixels with truth != 0, not excluded, where pred == truth.
double overall_accuracy(const LabelMap& pred, const LabelMap& truth,
                        const std::vector<TrainingSample>& exclude = {});

} // namespace segsalsa::hsio
