#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "smgrnn/stats.hpp"

using namespace smgrnn;

namespace {

// Two-pass oracle over the window contents.
std::pair<double, double> two_pass(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size());
    return {m, var};
}

}  // namespace

TEST_CASE("window: first sample") {
    RollingWindow w(10);
    w.push(1.0);
    CHECK(w.size() == 1);
    CHECK(w.mean() == doctest::Approx(1.0));
    CHECK(w.variance() == doctest::Approx(0.0));
}

TEST_CASE("window: FIFO eviction at capacity") {
    RollingWindow w(3);
    for (double v : {1.0, 2.0, 3.0, 4.0}) w.push(v);
    CHECK(w.values() == std::vector<double>{2.0, 3.0, 4.0});
    CHECK(w.size() == 3);
}

TEST_CASE("window: running sums match brute force over 10k pushes") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RollingWindow w(64);
    for (int i = 0; i < 10000; ++i) {
        w.push(u(rng));
        if (i % 997 == 0 || i > 9990) {
            auto vals = w.values();
            double s = 0.0, ss = 0.0;
            for (double v : vals) {
                s += v;
                ss += v * v;
            }
            CHECK(w.sum() == doctest::Approx(s).epsilon(1e-9));
            CHECK(w.sum_sq() == doctest::Approx(ss).epsilon(1e-9));
        }
    }
    CHECK(w.size() == 64);
}

TEST_CASE("window: capacity is never exceeded, n saturates at T") {
    RollingWindow w(5);
    for (int i = 0; i < 17; ++i) {
        w.push(static_cast<double>(i));
        CHECK(w.size() <= 5);
    }
    CHECK(w.size() == 5);
}

TEST_CASE("edge_stats: constant sequence") {
    HistoryStore store(8);
    store.on_structural_edit({}, std::vector<EdgeId>{3}, {}, {});
    for (int i = 0; i < 3; ++i) store.record_step({{3, 0.5}}, {});
    EdgeStats s = store.edge_stats(3);
    CHECK(s.mean == doctest::Approx(0.5));
    CHECK(s.variance == doctest::Approx(0.0));
    CHECK(s.n == 3);
}

TEST_CASE("edge_stats: symmetric pair uses the 1/n divisor") {
    HistoryStore store(8);
    store.on_structural_edit({}, std::vector<EdgeId>{0}, {}, {});
    store.record_step({{0, -1.0}}, {});
    store.record_step({{0, 1.0}}, {});
    EdgeStats s = store.edge_stats(0);
    CHECK(s.mean == doctest::Approx(0.0));
    CHECK(s.variance == doctest::Approx(1.0));
}

TEST_CASE("edge_stats: matches the two-pass oracle on random data") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 0.3);
    HistoryStore store(100);
    store.on_structural_edit({}, std::vector<EdgeId>{1}, {}, {});
    for (int i = 0; i < 100; ++i) store.record_step({{1, gauss(rng)}}, {});
    auto [m, var] = two_pass(store.edge_window(1).values());
    EdgeStats s = store.edge_stats(1);
    CHECK(std::abs(s.mean - m) <= 1e-12);
    CHECK(std::abs(s.variance - var) <= 1e-12);
}

TEST_CASE("store: keys follow the live graph IDs") {
    std::mt19937_64 rng(13);
    DynamicGraph g(2, 2, 1, 0.8, rng);
    HistoryStore store(g, 10);
    CHECK(store.edge_count() == g.edge_count());
    CHECK(store.node_count() == g.node_count());
    for (const auto& [id, e] : g.edges()) CHECK(store.has_edge(id));
}

TEST_CASE("on_structural_edit: added elements start empty, removed ones vanish") {
    HistoryStore store(10);
    store.on_structural_edit({}, std::vector<EdgeId>{7}, {}, {});
    CHECK(store.edge_stats(7).n == 0);
    store.record_step({{7, 0.1}}, {});
    store.on_structural_edit({}, {}, {}, std::vector<EdgeId>{7});
    CHECK_THROWS_AS(store.edge_stats(7), std::out_of_range);
    CHECK_THROWS_AS(store.record_step({{7, 0.1}}, {}), std::out_of_range);
    // double registration and unknown retirement are rejected
    store.on_structural_edit({}, std::vector<EdgeId>{8}, {}, {});
    CHECK_THROWS_AS(store.on_structural_edit({}, std::vector<EdgeId>{8}, {}, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(store.on_structural_edit({}, {}, {}, std::vector<EdgeId>{99}),
                    std::invalid_argument);
}

TEST_CASE("on_structural_edit: untouched windows stay byte-identical") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    HistoryStore store(16);
    store.on_structural_edit(std::vector<NodeId>{1, 2},
                             std::vector<EdgeId>{10, 11, 12}, {}, {});
    for (int i = 0; i < 40; ++i)
        store.record_step({{10, u(rng)}, {11, u(rng)}, {12, u(rng)}},
                          {{1, u(rng)}, {2, u(rng)}});
    auto w10 = store.edge_window(10).values();
    auto w11 = store.edge_window(11).values();
    // an edit touching only node 2 and edge 12
    store.on_structural_edit({}, {}, std::vector<NodeId>{2}, std::vector<EdgeId>{12});
    CHECK(store.edge_window(10).values() == w10);
    CHECK(store.edge_window(11).values() == w11);
}

TEST_CASE("stable IDs mean no ghost history on re-creation") {
    // dropping edge 5 and adding a new edge between the same endpoints
    // produces a different id, so its window starts empty by construction
    HistoryStore store(10);
    store.on_structural_edit({}, std::vector<EdgeId>{5}, {}, {});
    for (int i = 0; i < 10; ++i) store.record_step({{5, 1.0}}, {});
    store.on_structural_edit({}, {}, {}, std::vector<EdgeId>{5});
    store.on_structural_edit({}, std::vector<EdgeId>{6}, {}, {});
    CHECK(store.edge_stats(6).n == 0);
}
