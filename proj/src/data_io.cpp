#include "afgm/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "afgm/errors.hpp"

namespace afgm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

// Splits RFC-4180 text into records. Quoted fields may contain commas,
// doubled quotes and line breaks.
class CsvReader {
public:
    explicit CsvReader(std::string_view text) : text_(text) {}

    bool next(std::vector<std::string>& fields) {
        fields.clear();
        while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
            ++pos_;  // blank lines carry no record
        }
        if (pos_ >= text_.size()) {
            return false;
        }
        std::string field;
        bool quoted = false;
        while (pos_ < text_.size()) {
            const char c = text_[pos_++];
            if (quoted) {
                if (c == '"') {
                    if (pos_ < text_.size() && text_[pos_] == '"') {
                        field += '"';
                        ++pos_;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\n' || c == '\r') {
                if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') {
                    ++pos_;
                }
                break;
            } else {
                field += c;
            }
        }
        if (quoted) {
            throw IngestionError("unterminated quoted field");
        }
        fields.push_back(std::move(field));
        return true;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::string_view text, std::string source) {
    CsvReader reader(text);
    std::vector<std::string> fields;
    if (!reader.next(fields)) {
        throw IngestionError(source + ": file is empty");
    }
    if (fields.size() < 2) {
        throw IngestionError(source + ": header needs a timestamp column and at least one variable");
    }
    Dataset ds;
    ds.source = source;
    for (std::size_t c = 1; c < fields.size(); ++c) {
        ds.names.emplace_back(trim(fields[c]));
    }
    const std::size_t width = fields.size();
    const std::size_t D = width - 1;
    std::vector<double> values;
    std::size_t row = 0;
    try {
        while (reader.next(fields)) {
            ++row;
            if (fields.size() != width) {
                throw IngestionError(source + ": row " + std::to_string(row) + ": expected " + std::to_string(width) +
                                     " fields, found " + std::to_string(fields.size()));
            }
            for (std::size_t c = 1; c < width; ++c) {
                double v = 0.0;
                if (!parse_number(fields[c], v)) {
                    throw IngestionError(source + ": row " + std::to_string(row) + ", column " +
                                         std::to_string(c + 1) + " ('" + ds.names[c - 1] + "'): non-numeric value '" +
                                         fields[c] + "'");
                }
                values.push_back(v);
            }
            ds.timestamps.emplace_back(trim(fields[0]));
        }
    } catch (const IngestionError& e) {
        const std::string msg = e.what();
        if (msg.rfind(source, 0) == 0) {
            throw;
        }
        throw IngestionError(source + ": row " + std::to_string(row + 1) + ": " + msg);
    }
    if (row == 0) {
        throw IngestionError(source + ": no data rows");
    }

    // Numeric timestamps compare as numbers; anything else (ISO dates) lexicographically.
    bool numeric = true;
    std::vector<double> stamps;
    for (const auto& t : ds.timestamps) {
        double v = 0.0;
        if (!parse_number(t, v)) {
            numeric = false;
            break;
        }
        stamps.push_back(v);
    }
    for (std::size_t r = 1; r < ds.timestamps.size(); ++r) {
        const bool ordered = numeric ? stamps[r] > stamps[r - 1] : ds.timestamps[r] > ds.timestamps[r - 1];
        if (!ordered) {
            throw IngestionError(source + ": row " + std::to_string(r + 1) + ": timestamp '" + ds.timestamps[r] +
                                 "' does not follow '" + ds.timestamps[r - 1] + "'");
        }
    }
    ds.values = Tensor(Shape{row, D}, std::move(values));
    return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw ConfigError("data file not found: " + path.string());
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot read data file: " + path.string());
    }
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_csv(buf.str(), path.string());
}

SplitScheme parse_split_scheme(const std::string& s) {
    if (s == "auto") return SplitScheme::automatic;
    if (s == "ett_standard" || s == "ett_hourly") return SplitScheme::ett_hourly;
    if (s == "ett_minute") return SplitScheme::ett_minute;
    if (s == "ratio") return SplitScheme::ratio;
    throw ConfigError("split must be auto, ett_standard, ett_hourly, ett_minute or ratio, got '" + s + "'");
}

const char* to_string(SplitScheme s) {
    switch (s) {
        case SplitScheme::automatic: return "auto";
        case SplitScheme::ett_hourly: return "ett_hourly";
        case SplitScheme::ett_minute: return "ett_minute";
        case SplitScheme::ratio: return "ratio";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("split must be train, val or test, got '" + s + "'");
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

RowRange SplitBounds::range(Split s) const {
    switch (s) {
        case Split::train: return {0, train_end};
        case Split::val: return {train_end - T, val_end};
        case Split::test: return {val_end - T, test_end};
    }
    return {};
}

SplitBounds split(const Dataset& ds, SplitScheme scheme, std::size_t T, std::size_t H) {
    const std::size_t N = ds.rows();
    if (scheme == SplitScheme::automatic) {
        const std::string name = std::filesystem::path(ds.source).filename().string();
        if (name.rfind("ETTh", 0) == 0) {
            scheme = SplitScheme::ett_hourly;
        } else if (name.rfind("ETTm", 0) == 0) {
            scheme = SplitScheme::ett_minute;
        } else {
            scheme = SplitScheme::ratio;
        }
    }
    SplitBounds b;
    b.scheme = scheme;
    b.T = T;
    if (scheme == SplitScheme::ratio) {
        const auto train = static_cast<std::size_t>(static_cast<double>(N) * 0.7);
        const auto test = static_cast<std::size_t>(static_cast<double>(N) * 0.2);
        b.train_end = train;
        b.val_end = N - test;
        b.test_end = N;
    } else {
        const std::size_t unit = scheme == SplitScheme::ett_hourly ? 24 * 30 : 24 * 30 * 4;
        b.train_end = 12 * unit;
        b.val_end = 16 * unit;
        b.test_end = 20 * unit;
        if (N < b.test_end) {
            throw ConfigError(ds.source + ": " + std::to_string(N) + " rows is too short for the " + to_string(scheme) +
                              " split (needs " + std::to_string(b.test_end) + ")");
        }
    }
    if (b.train_end < T + H) {
        throw ConfigError(ds.source + ": train split has " + std::to_string(b.train_end) +
                          " rows, fewer than T + H = " + std::to_string(T + H));
    }
    for (Split s : {Split::val, Split::test}) {
        const RowRange r = b.range(s);
        if (r.size() < T + H) {
            throw ConfigError(ds.source + ": " + to_string(s) + " split spans " + std::to_string(r.size()) +
                              " rows including look-back, fewer than T + H = " + std::to_string(T + H));
        }
    }
    return b;
}

Standardizer Standardizer::fit(const Dataset& ds, const SplitBounds& bounds) {
    const std::size_t D = ds.vars();
    const std::size_t n = bounds.train_end;
    Standardizer st{Tensor(Shape{D}), Tensor(Shape{D})};
    for (std::size_t d = 0; d < D; ++d) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum += ds.values.at(r, d);
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dv = ds.values.at(r, d) - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (!(sd > 0.0)) {
            throw ConfigError(ds.source + ": column '" + ds.names[d] + "' is constant over the training split");
        }
        st.mean[d] = mean;
        st.stdev[d] = sd;
    }
    return st;
}

Tensor Standardizer::apply(const Tensor& values) const {
    const std::size_t D = mean.size();
    if (values.rank() != 2 || values.extent(1) != D) {
        throw DimensionError("standardize: expected [*," + std::to_string(D) + "], got " + to_string(values.shape()));
    }
    Tensor out(values.shape());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] - mean[i % D]) / stdev[i % D];
    }
    return out;
}

WindowSet::WindowSet(std::shared_ptr<const Tensor> standardized, RowRange range, std::size_t T, std::size_t H)
    : data_(std::move(standardized)), range_(range), T_(T), H_(H), count_(0) {
    if (range.end > data_->extent(0) || range.size() < T + H) {
        throw ConfigError("window range [" + std::to_string(range.begin) + "," + std::to_string(range.end) +
                          ") cannot hold T + H = " + std::to_string(T + H) + " rows");
    }
    count_ = range.size() - T - H + 1;
}

SeriesWindow WindowSet::at(std::size_t i) const {
    if (i >= count_) {
        throw DimensionError("window " + std::to_string(i) + " out of range (" + std::to_string(count_) + ")");
    }
    const std::size_t D = data_->extent(1);
    const std::size_t start = range_.begin + i;
    const auto& src = data_->storage();
    const auto row = [&](std::size_t r) { return src.begin() + static_cast<std::ptrdiff_t>(r * D); };
    SeriesWindow w;
    w.origin = start;
    w.input = Tensor(Shape{T_, D}, std::vector<double>(row(start), row(start + T_)));
    w.target = Tensor(Shape{H_, D}, std::vector<double>(row(start + T_), row(start + T_ + H_)));
    return w;
}

WindowSet PreparedData::windows(Split s, std::size_t T, std::size_t H) const {
    return WindowSet(standardized, bounds.range(s), T, H);
}

PreparedData prepare(Dataset ds, SplitScheme scheme, std::size_t T, std::size_t H) {
    PreparedData p;
    p.bounds = split(ds, scheme, T, H);
    p.stats = Standardizer::fit(ds, p.bounds);
    p.standardized = std::make_shared<const Tensor>(p.stats.apply(ds.values));
    p.dataset = std::move(ds);
    return p;
}

Metrics metrics(const Tensor& pred, const Tensor& target) {
    MetricAccumulator acc;
    acc.add(pred, target);
    return acc.result();
}

void MetricAccumulator::add(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("metrics: prediction " + to_string(pred.shape()) + " and target " +
                             to_string(target.shape()) + " differ");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sq_ += d * d;
        abs_ += std::abs(d);
    }
    n_ += pred.size();
}

Metrics MetricAccumulator::result() const {
    if (n_ == 0) {
        return {};
    }
    return Metrics{sq_ / static_cast<double>(n_), abs_ / static_cast<double>(n_)};
}

}  // namespace afgm
