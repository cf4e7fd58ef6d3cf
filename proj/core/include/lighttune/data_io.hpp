#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lighttune/mlp.hpp"

namespace lighttune::io {

/// MNIST-style IDX dataset. Pixels stay as raw bytes; features() scales a
/// sample to [0, 1] on demand.
struct IdxDataset {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols
    std::vector<std::uint8_t> labels;  // count

    std::size_t feature_dim() const { return rows * cols; }
    void features(std::size_t i, std::span<double> out) const;
};

/// Parses big-endian IDX image/label files. Paths ending in .gz, or plain
/// files, are both handled (zlib reads uncompressed files transparently).
/// Distinct ParseErrors for bad magic, truncation and count mismatch.
IdxDataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// Raw IDX writers, used to fabricate small datasets in tests and recipes.
void save_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                     std::span<const std::uint8_t> pixels);
void save_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

/// Nearest class in the label set; exact midpoints round toward the lower
/// class. p must lie in [0, 1].
double quantize_bler(double p, const LabelSet& classes);

/// Strict key=value configuration text with [section] headers and '#'
/// comments. Duplicate keys and malformed lines are parse errors with line
/// info. Section and key names are matched case-sensitively.
class ConfigMap {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        int line = 0;
    };

    static ConfigMap parse(const std::string& text);
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    const std::string& get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    const std::vector<Entry>& entries() const { return entries_; }
    /// All section names present, in first-appearance order.
    std::vector<std::string> sections() const;

private:
    std::vector<Entry> entries_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

/// Per-feature affine normalization x_norm = (x - offset) / scale.
class FeatureScaler {
public:
    FeatureScaler() = default;
    FeatureScaler(std::vector<double> offsets, std::vector<double> scales);

    static FeatureScaler identity(std::size_t n);
    /// Fixed constants for the 12 link features.
    static FeatureScaler standard_link();

    std::size_t size() const { return offsets_.size(); }
    std::vector<double> apply(std::span<const double> raw) const;
    std::string describe() const;  // manifest line

private:
    std::vector<double> offsets_;
    std::vector<double> scales_;
};

/// CSV with a fixed header order, decimal dot, '\n' terminated rows. Doubles
/// are written with 17 significant digits so a read-back reproduces the
/// value.
std::string csv_format(double v);
std::string csv_format(long long v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, std::span<const std::string> header);
    void row(std::span<const std::string> cells);
    void flush();

private:
    std::string path_;
    std::string buf_;
    std::size_t columns_ = 0;
    bool flushed_ = false;
};

void write_csv(const std::string& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

/// Minimal CSV reader for round-trip checks and summary post-processing.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

/// Versioned text dump of dims plus row-major weights and biases.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lighttune::io
