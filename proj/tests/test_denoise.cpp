#include <gtest/gtest.h>

#include "checks.hpp"

using namespace dhrs;

namespace {

std::shared_ptr<const GBuffer> flat(int w = 24, int h = 16) {
    return std::make_shared<const GBuffer>(checks::flat_gbuffer(w, h));
}

}  // namespace

TEST(Denoise, ValidateHistory) {
    const FilterParams p;
    const SurfaceSample a{2.0f, {0, 0, 1}, 3};
    EXPECT_TRUE(validate_history(a, a, p));
    EXPECT_FALSE(validate_history(a, {2.0f, {0, 0, 1}, 4}, p));
    EXPECT_FALSE(validate_history(a, {2.0f, {1, 0, 0}, 3}, p));
    EXPECT_TRUE(validate_history(a, {2.1f, {0, 0, 1}, 3}, p));
    EXPECT_FALSE(validate_history(a, {2.5f, {0, 0, 1}, 3}, p));
}

TEST(Denoise, FirstFrameTakesTheInput) {
    auto g = flat();
    SplitMix rng(1);
    std::vector<float> x(g->size());
    for (auto& v : x) v = static_cast<float>(rng.uniform());
    const auto t = temporal_accumulate(x, *g, FilterHistory{}, FilterParams{});
    EXPECT_EQ(t.mean, x);
    for (auto h : t.length) EXPECT_EQ(h, 1);
    for (auto f : t.fallback) EXPECT_EQ(f, 1);
}

TEST(Denoise, AlphaOneIsTemporalIdentity) {
    auto g = flat();
    FilterParams p;
    p.alpha = 1.0;
    FilterHistory hist;
    SplitMix rng(2);
    std::vector<float> x(g->size());
    for (int k = 0; k < 5; ++k) {
        for (auto& v : x) v = static_cast<float>(rng.uniform());
        const auto t = temporal_accumulate(x, *g, hist, p);
        EXPECT_EQ(t.mean, x);
        svgf_filter_scalar(x, g, hist, p);
    }
}

TEST(Denoise, ConstantInputIsAnExactFixedPoint) {
    for (float c : {0.0f, 0.3f, 0.71875f, 1.0f}) EXPECT_EQ(checks::denoise_fixed_point_error(40, c), 0.0) << c;
}

TEST(Denoise, EmaReducesNoiseOnAStaticScene) {
    auto g = flat(32, 32);
    FilterHistory hist;
    const FilterParams p;
    SplitMix rng(5);
    std::vector<float> x(g->size());
    TemporalResult t;
    for (int k = 0; k < 64; ++k) {
        for (auto& v : x) v = static_cast<float>(0.4 + rng.uniform(-0.3, 0.3));
        t = temporal_accumulate(x, *g, hist, p);
        svgf_filter_scalar(x, g, hist, p);
    }
    const double sigma = 0.6 / std::sqrt(12.0);
    double err = 0.0;
    for (float m : t.mean) err += std::abs(m - 0.4);
    err /= static_cast<double>(t.mean.size());
    EXPECT_LE(err, sigma / 3.0);
}

TEST(Denoise, VarianceOfAConstantWithHistoryIsZero) {
    auto g = flat();
    FilterHistory hist;
    const FilterParams p;
    std::vector<float> x(g->size(), 0.25f);
    for (int k = 0; k < 8; ++k) svgf_filter_scalar(x, g, hist, p);
    const auto t = temporal_accumulate(x, *g, hist, p);
    for (float v : estimate_variance(t, *g, p, depth_gradient(*g))) EXPECT_EQ(v, 0.0f);
}

TEST(Denoise, SpatialVarianceOnAFlatPlaneIsTheSampleVariance) {
    auto g = flat(20, 14);
    SplitMix rng(8);
    std::vector<float> x(g->size());
    for (int y = 0; y < g->height; ++y)
        for (int xx = 0; xx < g->width; ++xx) x[g->index(xx, y)] = ((xx + y) % 2) ? 1.0f : 0.0f;
    const FilterParams p;
    const auto t = temporal_accumulate(x, *g, FilterHistory{}, p);
    const auto var = estimate_variance(t, *g, p, depth_gradient(*g));
    for (int y = 0; y < g->height; ++y)
        for (int xx = 0; xx < g->width; ++xx) {
            double s1 = 0, s2 = 0;
            int n = 0;
            for (int dy = -3; dy <= 3; ++dy)
                for (int dx = -3; dx <= 3; ++dx) {
                    const int qx = xx + dx, qy = y + dy;
                    if (qx < 0 || qy < 0 || qx >= g->width || qy >= g->height) continue;
                    const double v = x[g->index(qx, qy)];
                    s1 += v;
                    s2 += v * v;
                    ++n;
                }
            const double m = s1 / n;
            const double expected = s2 / n - m * m;
            EXPECT_GT(var[g->index(xx, y)], 0.0f);
            EXPECT_NEAR(var[g->index(xx, y)], expected, 1e-6);
        }
}

TEST(Denoise, AtrousKeepsAConstantField) {
    auto g = flat();
    std::vector<float> v(g->size(), 0.37f), var(g->size(), 0.01f);
    const auto grad = depth_gradient(*g);
    for (int step : {1, 2, 4, 8}) EXPECT_EQ(atrous_pass(v, var, *g, step, FilterParams{}, grad).values, v);
}

TEST(Denoise, AtrousImpulseIsTheB3Kernel) {
    auto g = flat(15, 15);
    std::vector<float> v(g->size(), 0.0f), var(g->size(), 0.0f);
    v[g->index(7, 7)] = 1.0f;
    const auto out = atrous_pass(v, var, *g, 1, FilterParams{}, depth_gradient(*g)).values;
    std::vector<double> in(v.begin(), v.end());
    const auto ref = oracle::b3_convolve(in, g->width, g->height);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-6);
}

TEST(Denoise, AtrousStopsAtGeometryEdges) {
    GBuffer g = checks::flat_gbuffer(16, 8);
    for (int y = 0; y < g.height; ++y)
        for (int x = 8; x < g.width; ++x) g.normal[g.index(x, y)] = {1, 0, 0};
    std::vector<float> v(g.size(), 0.0f), var(g.size(), 0.0f);
    for (int y = 0; y < g.height; ++y)
        for (int x = 8; x < g.width; ++x) v[g.index(x, y)] = 1.0f;
    const auto out = atrous_pass(v, var, g, 1, FilterParams{}, depth_gradient(g)).values;
    EXPECT_EQ(out, v);
}

TEST(Denoise, OutputsStayInRange) {
    const auto r = checks::denoise_range(200, 77);
    EXPECT_EQ(r.out_of_range, 0u);
    EXPECT_EQ(r.count_violations, 0u);
}

TEST(Denoise, ZeroNoiseInputIsUnchanged) {
    auto g = flat();
    AoBuffer ao;
    ao.width = g->width;
    ao.height = g->height;
    ao.rays = 32;
    ao.counts.assign(g->size(), 32);
    FilterHistory hist;
    for (int k = 0; k < 3; ++k) EXPECT_EQ(svgf_filter(ao, g, hist, FilterParams{}).counts, ao.counts);
}

TEST(Denoise, StaticTemporalStdDropsBelowAQuarter) {
    const auto r = checks::denoise_temporal_std(64, 64, 32, 0.5, 3);
    EXPECT_GT(r.input_std, 0.05);
    EXPECT_LE(r.output_std, 0.25 * r.input_std);
}

TEST(Denoise, SpatialFilterPreservesTheMeanOnUniformGeometry) {
    auto g = flat(64, 48);
    SplitMix rng(21);
    std::vector<float> x(g->size());
    for (auto& v : x) v = rng.uniform() < 0.3 ? 1.0f : 0.0f;
    FilterHistory hist;
    const auto out = svgf_filter_scalar(x, g, hist, FilterParams{});
    double mi = 0, mo = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mi += x[i], mo += out[i];
    mi /= static_cast<double>(x.size());
    mo /= static_cast<double>(x.size());
    const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(x.size()));
    EXPECT_LE(std::abs(mi - mo), 2.0 * sigma);
}

TEST(Denoise, RequantizeRoundsHalfAwayFromZero) {
    EXPECT_EQ(requantize(0.5 / 32, 32), 1);
    EXPECT_EQ(requantize(1.49 / 32, 32), 1);
    EXPECT_EQ(requantize(2.5 / 8, 8), 3);
    EXPECT_EQ(requantize(-0.1, 8), 0);
    EXPECT_EQ(requantize(1.2, 8), 8);
}

TEST(Denoise, ParameterValidation) {
    FilterParams p;
    p.alpha = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.iterations = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.sigma_n = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    auto g = flat();
    AoBuffer wrong;
    wrong.width = 3;
    wrong.height = 3;
    wrong.counts.assign(9, 0);
    FilterHistory hist;
    EXPECT_THROW(svgf_filter(wrong, g, hist, FilterParams{}), std::invalid_argument);
}

TEST(Denoise, ShadowFilteringKeepsBitsInRange) {
    auto g = flat();
    VisibilityBuffer v;
    v.width = g->width;
    v.height = g->height;
    v.light_count = 3;
    v.bits.resize(g->size());
    SplitMix rng(4);
    for (auto& b : v.bits) b = static_cast<std::uint8_t>(rng.next_u64() & 7);
    std::vector<FilterHistory> hists;
    const auto out = filter_visibility(v, g, hists, FilterParams{});
    EXPECT_EQ(hists.size(), 3u);
    for (auto b : out.bits) EXPECT_EQ(b & ~7, 0);
}
