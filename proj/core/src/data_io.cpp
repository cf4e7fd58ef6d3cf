#include "lighttune/data_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lighttune/errors.hpp"

namespace lighttune::io {

void IdxDataset::features(std::size_t i, std::span<double> out) const {
    const std::size_t d = feature_dim();
    if (out.size() != d) throw ShapeError("feature buffer size mismatch");
    const std::uint8_t* p = pixels.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) out[k] = static_cast<double>(p[k]) / 255.0;
}

namespace {

class GzReader {
public:
    explicit GzReader(const std::string& path) : path_(path), f_(gzopen(path.c_str(), "rb")) {
        if (f_ == nullptr) throw ParseError("cannot open '" + path + "'");
    }
    ~GzReader() {
        if (f_ != nullptr) gzclose(f_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* dst, std::size_t n) {
        const int got = gzread(f_, dst, static_cast<unsigned>(n));
        if (got < 0 || static_cast<std::size_t>(got) != n)
            throw ParseError("truncated IDX file '" + path_ + "'");
    }
    std::uint32_t read_u32_be() {
        std::uint8_t b[4];
        read_exact(b, 4);
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
               (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
    }
    bool at_eof() {
        std::uint8_t probe;
        return gzread(f_, &probe, 1) <= 0;
    }

private:
    std::string path_;
    gzFile f_;
};

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

IdxDataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    IdxDataset ds;
    {
        GzReader r(images_path);
        const std::uint32_t magic = r.read_u32_be();
        if (magic != kImagesMagic)
            throw ParseError("bad magic in image file '" + images_path + "'");
        ds.count = r.read_u32_be();
        ds.rows = r.read_u32_be();
        ds.cols = r.read_u32_be();
        ds.pixels.resize(ds.count * ds.rows * ds.cols);
        r.read_exact(ds.pixels.data(), ds.pixels.size());
        if (!r.at_eof()) throw ParseError("trailing bytes in image file '" + images_path + "'");
    }
    {
        GzReader r(labels_path);
        const std::uint32_t magic = r.read_u32_be();
        if (magic != kLabelsMagic)
            throw ParseError("bad magic in label file '" + labels_path + "'");
        const std::uint32_t n = r.read_u32_be();
        if (n != ds.count)
            throw ParseError("image/label count mismatch: " + std::to_string(ds.count) + " vs " +
                             std::to_string(n));
        ds.labels.resize(n);
        r.read_exact(ds.labels.data(), ds.labels.size());
        if (!r.at_eof()) throw ParseError("trailing bytes in label file '" + labels_path + "'");
    }
    return ds;
}

namespace {

void write_u32_be(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8),
                               std::uint8_t(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void save_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                     std::span<const std::uint8_t> pixels) {
    if (rows * cols == 0 || pixels.size() % (rows * cols) != 0)
        throw InputError("pixel buffer is not a multiple of rows*cols");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_u32_be(out, kImagesMagic);
    write_u32_be(out, static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
    write_u32_be(out, static_cast<std::uint32_t>(rows));
    write_u32_be(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

void save_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_u32_be(out, kLabelsMagic);
    write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

double quantize_bler(double p, const LabelSet& classes) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("BLER value must lie in [0, 1]");
    return classes.nearest(p);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("unterminated section header", line_no,
                                 static_cast<int>(line.size()));
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no, 1);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key = value", line_no, 1);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no, 1);
        const auto idx_key = std::make_pair(section, key);
        if (cfg.index_.count(idx_key) != 0)
            throw ParseError("duplicate key '" + key + "' in section [" + section + "]", line_no,
                             1);
        cfg.index_[idx_key] = cfg.entries_.size();
        cfg.entries_.push_back(Entry{section, key, value, line_no});
    }
    return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    return parse(read_text_file(path));
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
    return index_.count(std::make_pair(section, key)) != 0;
}

const std::string& ConfigMap::get(const std::string& section, const std::string& key) const {
    const auto it = index_.find(std::make_pair(section, key));
    if (it == index_.end())
        throw ConfigError("missing key '" + key + "' in section [" + section + "]");
    return entries_[it->second].value;
}

std::string ConfigMap::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double ConfigMap::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& s = get(section, key);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "] is not a number: '" + s + "'");
    }
    if (pos != s.size())
        throw ConfigError("key '" + key + "' in [" + section + "] has trailing characters: '" +
                          s + "'");
    return v;
}

long long ConfigMap::get_int(const std::string& section, const std::string& key,
                             long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& s = get(section, key);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "] is not an integer: '" + s +
                          "'");
    }
    if (pos != s.size())
        throw ConfigError("key '" + key + "' in [" + section + "] has trailing characters: '" +
                          s + "'");
    return v;
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& s = get(section, key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("key '" + key + "' in [" + section + "] is not a boolean: '" + s + "'");
}

std::vector<std::string> ConfigMap::sections() const {
    std::vector<std::string> out;
    for (const Entry& e : entries_) {
        bool seen = false;
        for (const std::string& s : out) {
            if (s == e.section) {
                seen = true;
                break;
            }
        }
        if (!seen) out.push_back(e.section);
    }
    return out;
}

FeatureScaler::FeatureScaler(std::vector<double> offsets, std::vector<double> scales)
    : offsets_(std::move(offsets)), scales_(std::move(scales)) {
    if (offsets_.size() != scales_.size())
        throw ShapeError("scaler offset/scale size mismatch");
    for (double s : scales_) {
        if (!(s != 0.0) || !std::isfinite(s)) throw InputError("scaler scales must be non-zero");
    }
}

FeatureScaler FeatureScaler::identity(std::size_t n) {
    return FeatureScaler(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

FeatureScaler FeatureScaler::standard_link() {
    // order: csi_rs_snr, csi_rs_capacity, delay_spread, doppler, pdsch_snr,
    // hist0, hist1, hist2, ri, cqi, n_rbs, n_dmrs
    return FeatureScaler(
        {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {40.0, 30.0, 300.0, 50.0, 40.0, 40.0, 40.0, 40.0, 4.0, 15.0, 120.0, 4.0});
}

std::vector<double> FeatureScaler::apply(std::span<const double> raw) const {
    if (raw.size() != offsets_.size()) throw ShapeError("scaler input size mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - offsets_[i]) / scales_[i];
    return out;
}

std::string FeatureScaler::describe() const {
    std::string s = "affine offsets=[";
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
        if (i) s += ",";
        s += csv_format(offsets_[i]);
    }
    s += "] scales=[";
    for (std::size_t i = 0; i < scales_.size(); ++i) {
        if (i) s += ",";
        s += csv_format(scales_[i]);
    }
    s += "]";
    return s;
}

std::string csv_format(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_format(long long v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, std::span<const std::string> header)
    : path_(path), columns_(header.size()) {
    if (header.empty()) throw InputError("CSV header must be non-empty");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

void CsvWriter::row(std::span<const std::string> cells) {
    if (cells.size() != columns_) throw ShapeError("CSV row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += cells[i];
    }
    buf_ += '\n';
}

void CsvWriter::flush() {
    write_text_file(path_, buf_);
    flushed_ = true;
}

void write_csv(const std::string& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
    CsvWriter w(path, header);
    for (const auto& r : rows) w.row(r);
    w.flush();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        out.push_back(std::move(cells));
    }
    return out;
}

void save_model(const MlpModel& model, const std::string& path) {
    std::ostringstream out;
    out << "lighttune-model v1\n";
    out << "dims";
    for (std::size_t m : model.dims()) out << ' ' << m;
    out << '\n';
    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
        const Layer& lay = model.layer(l);
        out << "layer " << l << '\n';
        for (std::size_t r = 0; r < lay.weights.rows(); ++r) {
            out << "w";
            for (std::size_t c = 0; c < lay.weights.cols(); ++c)
                out << ' ' << csv_format(lay.weights(r, c));
            out << '\n';
        }
        out << "b";
        for (double b : lay.bias) out << ' ' << csv_format(b);
        out << '\n';
    }
    write_text_file(path, out.str());
}

MlpModel load_model(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "lighttune-model v1")
        throw ParseError("unrecognized model file header in '" + path + "'", 1);
    if (!std::getline(in, line)) throw ParseError("missing dims line", 2);
    std::istringstream dims_in(line);
    std::string tag;
    dims_in >> tag;
    if (tag != "dims") throw ParseError("expected dims line", 2);
    std::vector<std::size_t> dims;
    std::size_t d;
    while (dims_in >> d) dims.push_back(d);
    MlpModel model = MlpModel::zeros(dims);

    int line_no = 2;
    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
        if (!std::getline(in, line)) throw ParseError("missing layer header", ++line_no);
        ++line_no;
        Layer& lay = model.layer(l);
        for (std::size_t r = 0; r < lay.weights.rows(); ++r) {
            if (!std::getline(in, line)) throw ParseError("truncated weights", ++line_no);
            ++line_no;
            std::istringstream row_in(line);
            row_in >> tag;
            if (tag != "w") throw ParseError("expected weight row", line_no);
            for (std::size_t c = 0; c < lay.weights.cols(); ++c) {
                if (!(row_in >> lay.weights(r, c)))
                    throw ParseError("short weight row", line_no);
            }
        }
        if (!std::getline(in, line)) throw ParseError("truncated bias", ++line_no);
        ++line_no;
        std::istringstream bias_in(line);
        bias_in >> tag;
        if (tag != "b") throw ParseError("expected bias row", line_no);
        for (std::size_t j = 0; j < lay.bias.size(); ++j) {
            if (!(bias_in >> lay.bias[j])) throw ParseError("short bias row", line_no);
        }
    }
    model.validate();
    return model;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
}

}  // namespace lighttune::io
