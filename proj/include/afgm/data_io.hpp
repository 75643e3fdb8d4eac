#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "afgm/tensor.hpp"

namespace afgm {

/// A numeric multivariate table with a leading timestamp column.
struct Dataset {
    std::string source;
    std::vector<std::string> names;       // variable names, D of them
    std::vector<std::string> timestamps;  // N of them, strictly increasing
    Tensor values;                        // [N,D], raw scale

    [[nodiscard]] std::size_t rows() const { return values.extent(0); }
    [[nodiscard]] std::size_t vars() const { return values.extent(1); }
};

/// Parses CSV text: header row, timestamp first, numeric cells after. Rows are
/// counted from 1 excluding the header; errors cite that row number.
Dataset parse_csv(std::string_view text, std::string source = "<memory>");

/// Throws ConfigError naming the path if it does not exist, IoError if it cannot be read.
Dataset load_csv(const std::filesystem::path& path);

enum class SplitScheme { automatic, ett_hourly, ett_minute, ratio };
SplitScheme parse_split_scheme(const std::string& s);
const char* to_string(SplitScheme s);

enum class Split { train, val, test };
Split parse_split(const std::string& s);
const char* to_string(Split s);

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const { return end - begin; }
};

/// Chronological partition. val and test ranges start T rows early so their
/// first window's input reaches back into the previous split.
struct SplitBounds {
    SplitScheme scheme = SplitScheme::ratio;
    std::size_t train_end = 0;
    std::size_t val_end = 0;
    std::size_t test_end = 0;
    std::size_t T = 0;

    [[nodiscard]] RowRange range(Split s) const;
};

/// ett_hourly: 8640/2880/2880 rows; ett_minute: four times that; ratio:
/// floor(0.7N) train, floor(0.2N) test, the rest validation. `automatic` picks
/// an ETT scheme from ETTh*/ETTm* file names and ratio otherwise.
/// Throws ConfigError if any split is shorter than T + H rows.
SplitBounds split(const Dataset& ds, SplitScheme scheme, std::size_t T, std::size_t H);

/// Per-variable z-score statistics (population std) from the training rows.
struct Standardizer {
    Tensor mean;   // [D]
    Tensor stdev;  // [D]

    /// Throws ConfigError naming the column if its training std is 0.
    static Standardizer fit(const Dataset& ds, const SplitBounds& bounds);
    [[nodiscard]] Tensor apply(const Tensor& values) const;
};

struct SeriesWindow {
    Tensor input;   // [T,D]
    Tensor target;  // [H,D]
    std::size_t origin = 0;  // row of input[0]
};

/// Stride-1 windows over one split of a standardized table.
class WindowSet {
public:
    WindowSet(std::shared_ptr<const Tensor> standardized, RowRange range, std::size_t T, std::size_t H);

    [[nodiscard]] std::size_t size() const noexcept { return count_; }
    [[nodiscard]] SeriesWindow at(std::size_t i) const;
    [[nodiscard]] std::size_t origin(std::size_t i) const { return range_.begin + i; }
    [[nodiscard]] RowRange range() const noexcept { return range_; }
    [[nodiscard]] std::size_t T() const noexcept { return T_; }
    [[nodiscard]] std::size_t H() const noexcept { return H_; }

private:
    std::shared_ptr<const Tensor> data_;
    RowRange range_;
    std::size_t T_;
    std::size_t H_;
    std::size_t count_;
};

/// Everything a run needs from one CSV: raw table, split, statistics and the
/// standardized copy shared by all window sets.
struct PreparedData {
    Dataset dataset;
    SplitBounds bounds;
    Standardizer stats;
    std::shared_ptr<const Tensor> standardized;

    [[nodiscard]] WindowSet windows(Split s, std::size_t T, std::size_t H) const;
};

PreparedData prepare(Dataset ds, SplitScheme scheme, std::size_t T, std::size_t H);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

/// Means over every element. Shapes must match.
Metrics metrics(const Tensor& pred, const Tensor& target);

/// Running MSE/MAE over many equally weighted elements.
class MetricAccumulator {
public:
    void add(const Tensor& pred, const Tensor& target);
    [[nodiscard]] Metrics result() const;
    [[nodiscard]] std::size_t count() const noexcept { return n_; }

private:
    double sq_ = 0.0;
    double abs_ = 0.0;
    std::size_t n_ = 0;
};

}  // namespace afgm
