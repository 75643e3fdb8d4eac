#include <gtest/gtest.h>

#include <cmath>

#include "afgm/data_io.hpp"
#include "afgm/errors.hpp"
#include "afgm/rng.hpp"
#include "synthetic.hpp"

namespace afgm {
namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

TEST(LoadCsv, SmallTable) {
    const Dataset ds = parse_csv("date,a,b\n2020-01-01,1,2\n2020-01-02,3.5,-4e1\n2020-01-03,5,6\n");
    EXPECT_EQ(ds.rows(), 3u);
    EXPECT_EQ(ds.vars(), 2u);
    EXPECT_EQ(ds.names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.values.at(1, 1), -40.0);
    EXPECT_EQ(ds.timestamps[2], "2020-01-03");
}

TEST(LoadCsv, QuotedFieldsAndCrlf) {
    const Dataset ds = parse_csv("\"date\",\"x, y\",z\r\n\"2020-01-01 00:00\",\"1.5\",2\r\n2020-01-01 01:00,3,4\r\n");
    EXPECT_EQ(ds.names[0], "x, y");
    EXPECT_EQ(ds.values.at(0, 0), 1.5);
    EXPECT_EQ(ds.rows(), 2u);
}

TEST(LoadCsv, NonNumericCellCitesRow) {
    std::string text = "date,a,b\n";
    for (int r = 1; r <= 6; ++r) {
        text += std::to_string(r) + "," + (r == 5 ? "NA" : "1") + ",2\n";
    }
    const std::string msg = error_of([&] { parse_csv(text); });
    EXPECT_NE(msg.find("row 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'a'"), std::string::npos) << msg;
    EXPECT_THROW(parse_csv(text), IngestionError);
}

TEST(LoadCsv, StructuralErrors) {
    EXPECT_THROW(parse_csv(""), IngestionError);
    EXPECT_THROW(parse_csv("date,a\n"), IngestionError);
    EXPECT_THROW(parse_csv("date\n1\n"), IngestionError);
    const std::string ragged = error_of([] { parse_csv("date,a,b\n1,2,3\n2,3\n"); });
    EXPECT_NE(ragged.find("row 2"), std::string::npos) << ragged;
    EXPECT_THROW(parse_csv("date,a\n1,nan\n"), IngestionError);
    EXPECT_THROW(parse_csv("date,a\n1,\"2\n"), IngestionError);
}

TEST(LoadCsv, RequiresChronologicalRows) {
    EXPECT_THROW(parse_csv("date,a\n2020-01-02,1\n2020-01-01,2\n"), IngestionError);
    EXPECT_THROW(parse_csv("date,a\n5,1\n5,2\n"), IngestionError);
    // numeric timestamps compare numerically, not as text
    EXPECT_NO_THROW(parse_csv("date,a\n9,1\n10,2\n"));
}

TEST(LoadCsv, MissingFileIsConfigError) {
    const std::string msg = error_of([] { load_csv("/nonexistent/dir/ETTh1.csv"); });
    EXPECT_NE(msg.find("/nonexistent/dir/ETTh1.csv"), std::string::npos);
    EXPECT_THROW(load_csv("/nonexistent/dir/ETTh1.csv"), ConfigError);
}

Dataset ramp(std::size_t n, std::size_t d = 2, std::string source = "ramp.csv") {
    Dataset ds;
    ds.source = std::move(source);
    ds.values = Tensor(Shape{n, d});
    for (std::size_t r = 0; r < n; ++r) {
        ds.timestamps.push_back(std::to_string(r));
        for (std::size_t c = 0; c < d; ++c) {
            ds.values.at(r, c) = static_cast<double>(r * (c + 1)) + std::sin(static_cast<double>(r + c));
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        ds.names.push_back("v" + std::to_string(c));
    }
    return ds;
}

TEST(Split, RatioOnHundredRows) {
    const SplitBounds b = split(ramp(100), SplitScheme::ratio, 4, 2);
    EXPECT_EQ(b.train_end, 70u);
    EXPECT_EQ(b.val_end - b.train_end, 10u);
    EXPECT_EQ(b.test_end - b.val_end, 20u);
    EXPECT_EQ(b.range(Split::val).begin, 66u);
    EXPECT_EQ(b.range(Split::test).begin, 76u);
}

TEST(Split, EttHourlyBoundaries) {
    const SplitBounds b = split(ramp(17420, 1, "/data/ETTh1.csv"), SplitScheme::automatic, 96, 96);
    EXPECT_EQ(b.scheme, SplitScheme::ett_hourly);
    EXPECT_EQ(b.range(Split::train).end, 8640u);
    EXPECT_EQ(b.range(Split::val).begin, 8640u - 96);
    EXPECT_EQ(b.range(Split::val).end, 11520u);
    EXPECT_EQ(b.range(Split::test).end, 14400u);
    EXPECT_EQ(split(ramp(69680, 1, "ETTm2.csv"), SplitScheme::automatic, 96, 96).train_end, 34560u);
    EXPECT_EQ(split(ramp(500, 1, "weather.csv"), SplitScheme::automatic, 24, 6).scheme, SplitScheme::ratio);
    EXPECT_THROW(split(ramp(1000, 1, "ETTh2.csv"), SplitScheme::automatic, 96, 96), ConfigError);
}

TEST(Split, TooShortIsConfigError) {
    // N = T + H - 1 cannot hold a single window
    EXPECT_THROW(split(ramp(5), SplitScheme::ratio, 4, 2), ConfigError);
    // train is long enough but validation (2 rows + 4 look-back) is not
    EXPECT_THROW(split(ramp(15), SplitScheme::ratio, 4, 4), ConfigError);
}

TEST(Windows, CountAndFirstWindow) {
    Dataset ds = ramp(10);
    auto data = std::make_shared<const Tensor>(ds.values);
    const WindowSet ws(data, RowRange{0, 10}, 4, 2);
    EXPECT_EQ(ws.size(), 5u);
    const SeriesWindow w = ws.at(0);
    EXPECT_EQ(w.input.shape(), (Shape{4, 2}));
    EXPECT_EQ(w.target.shape(), (Shape{2, 2}));
    EXPECT_EQ(w.input.at(3, 1), ds.values.at(3, 1));
    EXPECT_EQ(w.target.at(0, 0), ds.values.at(4, 0));
    EXPECT_EQ(ws.at(4).target.at(1, 1), ds.values.at(9, 1));
    EXPECT_THROW(ws.at(5), DimensionError);
}

TEST(Windows, EttTrainCount) {
    const PreparedData p = prepare(ramp(14400, 1, "ETTh1.csv"), SplitScheme::automatic, 96, 96);
    EXPECT_EQ(p.windows(Split::train, 96, 96).size(), 8640u - 96 - 96 + 1);
    EXPECT_EQ(p.windows(Split::val, 96, 96).size(), 2880u - 96 + 1);
    EXPECT_EQ(p.windows(Split::test, 96, 96).size(), 2880u - 96 + 1);
}

TEST(Windows, NeverCrossSplitBoundaries) {
    const PreparedData p = prepare(ramp(300), SplitScheme::ratio, 12, 6);
    for (Split s : {Split::train, Split::val, Split::test}) {
        const WindowSet ws = p.windows(s, 12, 6);
        const RowRange r = p.bounds.range(s);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const auto w = ws.at(i);
            ASSERT_GE(w.origin, r.begin);
            ASSERT_LE(w.origin + 12 + 6, r.end);
        }
        // targets lie inside the split proper, never in the look-back rows
        if (s != Split::train) {
            ASSERT_GE(ws.origin(0) + 12, s == Split::val ? p.bounds.train_end : p.bounds.val_end);
        }
    }
}

TEST(Standardize, TrainStatisticsOnly) {
    Dataset ds = ramp(200);
    const Tensor raw = ds.values;
    const PreparedData p = prepare(ds, SplitScheme::ratio, 8, 4);
    EXPECT_EQ(p.dataset.values, raw);  // raw data untouched
    const std::size_t n = p.bounds.train_end;
    for (std::size_t d = 0; d < 2; ++d) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            mean += p.standardized->at(r, d);
        }
        mean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            sq += std::pow(p.standardized->at(r, d) - mean, 2);
        }
        EXPECT_LT(std::abs(mean), 1e-10);
        EXPECT_LT(std::abs(std::sqrt(sq / static_cast<double>(n)) - 1.0), 1e-10);
    }
    // test-split rows are not centred because their stats were not used
    double tail = 0.0;
    for (std::size_t r = p.bounds.val_end; r < 200; ++r) {
        tail += p.standardized->at(r, 0);
    }
    EXPECT_GT(tail / 40.0, 1.0);
}

TEST(Standardize, ConstantColumnNamed) {
    Dataset ds = ramp(100);
    ds.names[1] = "flat";
    for (std::size_t r = 0; r < 100; ++r) {
        ds.values.at(r, 1) = 3.0;
    }
    const std::string msg = error_of([&] { prepare(ds, SplitScheme::ratio, 4, 2); });
    EXPECT_NE(msg.find("'flat'"), std::string::npos) << msg;
}

TEST(Pipeline, DeterministicFromBytes) {
    const std::string text = testing::synthetic_csv(400, 3, 8);
    const PreparedData a = prepare(parse_csv(text, "a.csv"), SplitScheme::ratio, 24, 12);
    const PreparedData b = prepare(parse_csv(text, "a.csv"), SplitScheme::ratio, 24, 12);
    const WindowSet wa = a.windows(Split::test, 24, 12);
    const WindowSet wb = b.windows(Split::test, 24, 12);
    ASSERT_EQ(wa.size(), wb.size());
    for (std::size_t i = 0; i < wa.size(); ++i) {
        ASSERT_EQ(wa.at(i).input, wb.at(i).input);
        ASSERT_EQ(wa.at(i).target, wb.at(i).target);
    }
}

TEST(Metrics, Examples) {
    const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
    const Metrics zero = metrics(a, a);
    EXPECT_EQ(zero.mse, 0.0);
    EXPECT_EQ(zero.mae, 0.0);
    Tensor b = a;
    for (auto& x : b.data()) {
        x += 2.0;
    }
    const Metrics off = metrics(b, a);
    EXPECT_EQ(off.mse, 4.0);
    EXPECT_EQ(off.mae, 2.0);
    EXPECT_THROW(metrics(a, Tensor(Shape{4})), DimensionError);

    SplitMix64 rng(4);
    const Tensor p = rng.uniform_tensor({5, 3}, -1, 1);
    const Tensor t = rng.uniform_tensor({5, 3}, -1, 1);
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < 15; ++i) {
        sq += (p[i] - t[i]) * (p[i] - t[i]);
        ab += std::abs(p[i] - t[i]);
    }
    const Metrics m = metrics(p, t);
    EXPECT_NEAR(m.mse, sq / 15, 1e-12);
    EXPECT_NEAR(m.mae, ab / 15, 1e-12);
}

}  // namespace
}  // namespace afgm
