#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "smgrnn/checkpoint.hpp"
#include "smgrnn/graph.hpp"
#include "smgrnn/random.hpp"

using namespace smgrnn;

namespace {

// Brute-force degree count straight off the edge map.
std::pair<int, int> scan_degrees(const DynamicGraph& g, NodeId id) {
    int in = 0, out = 0;
    for (const auto& [eid, e] : g.edges()) {
        if (e.dst == id) ++in;
        if (e.src == id) ++out;
    }
    return {in, out};
}

// Random small graph grown through the public edit API.
DynamicGraph random_graph(std::mt19937_64& rng, int max_hidden = 8) {
    std::uniform_int_distribution<int> io(1, 4);
    std::uniform_int_distribution<int> hid(0, max_hidden);
    std::uniform_real_distribution<double> dens(0.0, 1.0);
    DynamicGraph g(io(rng), io(rng), hid(rng), dens(rng), rng);
    std::uniform_int_distribution<int> edits(0, 12);
    int n = edits(rng);
    for (int i = 0; i < n; ++i) {
        std::vector<NodeId> ids;
        for (const auto& [id, node] : g.nodes()) ids.push_back(id);
        std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
        NodeId src = ids[pick(rng)];
        NodeId dst = ids[pick(rng)];
        std::normal_distribution<double> w(0.0, 0.5);
        try {
            g.add_edge(src, dst, w(rng));
        } catch (const std::invalid_argument&) {
        }
        if (!g.edges().empty() && i % 3 == 0) {
            std::vector<EdgeId> eids;
            for (const auto& [id, e] : g.edges()) eids.push_back(id);
            std::uniform_int_distribution<std::size_t> epick(0, eids.size() - 1);
            g.insert_relay(eids[epick(rng)], 0.01);
        }
    }
    return g;
}

}  // namespace

TEST_CASE("construction: full density wires every input-output pair") {
    std::mt19937_64 rng(7);
    DynamicGraph g(4, 2, 0, 1.0, rng);
    CHECK(g.node_count() == 6);
    CHECK(g.edge_count() == 8);
    for (const auto& [id, e] : g.edges()) {
        CHECK(g.node(e.src).role == NodeRole::Input);
        CHECK(g.node(e.dst).role == NodeRole::Output);
        CHECK_FALSE(e.delayed);
    }
    g.check_invariants();
}

TEST_CASE("construction: edge count matches the binomial mean over seeds") {
    // 8 candidate pairs at density 0.8: Binomial(8, 0.8), mean 6.4.
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        DynamicGraph g(4, 2, 0, 0.8, seed);
        total += static_cast<double>(g.edge_count());
    }
    double mean = total / 1000.0;
    CHECK(mean >= 6.0);
    CHECK(mean <= 6.8);
}

TEST_CASE("construction: zero density still connects every output") {
    DynamicGraph g(1, 1, 0, 0.0, std::uint64_t{3});
    CHECK(g.edge_count() == 1);
    const Edge& e = g.edges().begin()->second;
    CHECK(g.node(e.src).role == NodeRole::Input);
    CHECK(g.node(e.dst).role == NodeRole::Output);
}

TEST_CASE("construction: rejects empty input or output sets") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(DynamicGraph(0, 1, 0, 0.5, rng), std::invalid_argument);
    CHECK_THROWS_AS(DynamicGraph(1, 0, 0, 0.5, rng), std::invalid_argument);
}

TEST_CASE("forward: identity output through one edge") {
    DynamicGraph g(1, 1, 0, 1.0, std::uint64_t{1});
    EdgeId e = g.edges().begin()->first;
    g.set_weight(e, 0.5);
    std::vector<double> obs{1.0};
    auto out = g.forward(obs);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward: tanh applied at the hidden layer only") {
    std::mt19937_64 rng(2);
    DynamicGraph g = DynamicGraph::dense_mlp(1, 1, 1, rng);
    for (const auto& [id, e] : g.edges()) g.set_weight(id, 1.0);
    std::vector<double> obs{1.0};
    auto out = g.forward(obs);
    CHECK(out[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("forward: delayed self-recurrence reads the previous activation") {
    // input 0, output 2, hidden 1 with a delayed self-loop (restore is the
    // only path that represents one; add_edge refuses self-loops).
    std::vector<Node> nodes{{0, NodeRole::Input, 0.0, 0.0, 0.0},
                            {1, NodeRole::Hidden, 0.0, 0.0, 0.0},
                            {2, NodeRole::Output, 0.0, 0.0, 0.0}};
    std::vector<Edge> edges{{0, 0, 1, 1.0, false},
                            {1, 1, 1, 1.0, true},
                            {2, 1, 2, 1.0, false}};
    DynamicGraph g = DynamicGraph::restore(nodes, edges, {0}, {2}, 3, 3);

    std::vector<double> obs{0.0};
    g.forward(obs);
    CHECK(g.node(1).activation == doctest::Approx(0.0));
    g.forward(obs);
    CHECK(g.node(1).activation == doctest::Approx(0.0));

    g.set_bias(1, 1.0);
    g.reset_activations();
    g.forward(obs);
    CHECK(g.node(1).activation == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
    g.forward(obs);
    CHECK(g.node(1).activation ==
          doctest::Approx(std::tanh(1.0 + std::tanh(1.0))).epsilon(1e-12));
}

TEST_CASE("forward: dimension and finiteness guards") {
    DynamicGraph g(2, 1, 0, 1.0, std::uint64_t{1});
    std::vector<double> short_obs{1.0};
    CHECK_THROWS_AS(g.forward(short_obs), std::invalid_argument);
    std::vector<double> bad{1.0, std::nan("")};
    CHECK_THROWS_AS(g.forward(bad), std::invalid_argument);
}

TEST_CASE("insert_relay: minimal graph gains one node and two edges") {
    DynamicGraph g(1, 1, 0, 1.0, std::uint64_t{5});
    EdgeId orig = g.edges().begin()->first;
    RelayInsertion r = g.insert_relay(orig, 0.01);
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 3);
    CHECK(g.has_edge(orig));  // original edge retained
    CHECK(g.node(r.relay).role == NodeRole::Hidden);
    CHECK(g.node(r.relay).bias == 0.0);
    auto [in_deg, out_deg] = g.degrees(r.relay);
    CHECK(in_deg == 1);
    CHECK(out_deg == 1);
    g.check_invariants();
}

TEST_CASE("insert_relay: zero-weight relay leaves forward bit-identical") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        DynamicGraph g = random_graph(rng);
        std::vector<EdgeId> eids;
        for (const auto& [id, e] : g.edges()) eids.push_back(id);
        if (eids.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, eids.size() - 1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> obs(g.input_ids().size());
        for (double& v : obs) v = u(rng);

        DynamicGraph with_relay = g;
        with_relay.insert_relay(eids[pick(rng)], 0.0);
        auto a = g.forward(obs);
        auto b = with_relay.forward(obs);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("insert_relay: repeated insertion bookkeeping") {
    // (n + k, m + 2k) from (2, 1) with k = 2
    DynamicGraph g(1, 1, 0, 1.0, std::uint64_t{5});
    EdgeId orig = g.edges().begin()->first;
    g.insert_relay(orig, 0.01);
    g.insert_relay(orig, 0.01);
    CHECK(g.node_count() == 4);
    CHECK(g.edge_count() == 5);
    CHECK(g.has_edge(orig));
    g.check_invariants();
}

TEST_CASE("insert_relay: node and edge counts after k insertions") {
    std::mt19937_64 rng(13);
    DynamicGraph g(3, 2, 2, 0.7, rng);
    std::size_t n0 = g.node_count(), m0 = g.edge_count();
    for (int k = 1; k <= 6; ++k) {
        EdgeId any = g.edges().begin()->first;
        g.insert_relay(any, 0.01);
        CHECK(g.node_count() == n0 + static_cast<std::size_t>(k));
        CHECK(g.edge_count() == m0 + static_cast<std::size_t>(2 * k));
    }
}

TEST_CASE("insert_relay: unknown edge throws") {
    DynamicGraph g(1, 1, 0, 1.0, std::uint64_t{5});
    CHECK_THROWS_AS(g.insert_relay(999, 0.0), std::out_of_range);
}

TEST_CASE("add_edge: cycle-closing edges become delayed") {
    std::mt19937_64 rng(17);
    DynamicGraph g(1, 1, 2, 0.0, rng);
    std::vector<NodeId> hidden;
    for (const auto& [id, n] : g.nodes())
        if (n.role == NodeRole::Hidden) hidden.push_back(id);
    REQUIRE(hidden.size() == 2);

    EdgeId fwd = g.add_edge(hidden[0], hidden[1], 0.1);
    CHECK_FALSE(g.edge(fwd).delayed);
    EdgeId back = g.add_edge(hidden[1], hidden[0], 0.1);
    CHECK(g.edge(back).delayed);
    g.check_invariants();

    CHECK_THROWS_AS(g.add_edge(hidden[0], hidden[1], 0.1), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(hidden[0], hidden[0], 0.1), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(g.output_ids()[0], hidden[0], 0.1), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(hidden[0], g.input_ids()[0], 0.1), std::invalid_argument);
}

TEST_CASE("remove_edge: orphan candidate appears and repromotion fires") {
    std::mt19937_64 rng(19);
    DynamicGraph g(1, 1, 2, 0.0, rng);
    std::vector<NodeId> hidden;
    for (const auto& [id, n] : g.nodes())
        if (n.role == NodeRole::Hidden) hidden.push_back(id);

    EdgeId into = g.add_edge(g.input_ids()[0], hidden[0], 0.1);
    g.remove_edge(into);
    auto [in_deg, out_deg] = g.degrees(hidden[0]);
    CHECK(in_deg == 0);

    CHECK_THROWS_AS(g.remove_edge(4242), std::out_of_range);

    EdgeId fwd = g.add_edge(hidden[0], hidden[1], 0.1);
    EdgeId back = g.add_edge(hidden[1], hidden[0], 0.1);
    CHECK(g.edge(back).delayed);
    g.remove_edge(fwd);
    auto flipped = g.repromote_delayed();
    CHECK(flipped == std::vector<EdgeId>{back});
    CHECK_FALSE(g.edge(back).delayed);
    g.check_invariants();
}

TEST_CASE("remove_node: relay removal restores the minimal graph") {
    DynamicGraph g(1, 1, 0, 1.0, std::uint64_t{5});
    EdgeId orig = g.edges().begin()->first;
    RelayInsertion r = g.insert_relay(orig, 0.01);
    std::vector<EdgeId> removed = g.remove_node(r.relay);
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(removed.size() == 2);
    CHECK(g.has_edge(orig));
    g.check_invariants();
}

TEST_CASE("remove_node: incident edges are returned, roles are guarded") {
    std::mt19937_64 rng(23);
    DynamicGraph g(2, 1, 1, 0.0, rng);
    NodeId h = -1;
    for (const auto& [id, n] : g.nodes())
        if (n.role == NodeRole::Hidden) h = id;
    g.add_edge(g.input_ids()[0], h, 0.1);
    g.add_edge(g.input_ids()[1], h, 0.1);
    g.add_edge(h, g.output_ids()[0], 0.1);
    CHECK(g.remove_node(h).size() == 3);
    CHECK_THROWS_AS(g.remove_node(g.output_ids()[0]), std::invalid_argument);
    CHECK_THROWS_AS(g.remove_node(777), std::out_of_range);
}

TEST_CASE("degrees: matches a brute-force scan under random edits") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        DynamicGraph g = random_graph(rng);
        for (const auto& [id, n] : g.nodes()) {
            auto fast = g.degrees(id);
            auto slow = scan_degrees(g, id);
            CHECK(fast == slow);
        }
        g.check_invariants();
    }
}

TEST_CASE("forward: deterministic given state and observation") {
    std::mt19937_64 rng(31);
    DynamicGraph g = random_graph(rng);
    std::vector<double> obs(g.input_ids().size(), 0.25);
    DynamicGraph g2 = g;
    auto a = g.forward(obs);
    auto b = g2.forward(obs);
    CHECK(a == b);
    // same observation again from the evolved state, two identical copies
    DynamicGraph g3 = g;
    CHECK(g.forward(obs) == g3.forward(obs));
}

TEST_CASE("checkpoint: JSON round-trip reproduces forward bit-identically") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        DynamicGraph g = random_graph(rng);
        nlohmann::json j = graph_to_json(g);
        DynamicGraph loaded = graph_from_json(j);
        CHECK(loaded.node_count() == g.node_count());
        CHECK(loaded.edge_count() == g.edge_count());
        CHECK(loaded.next_node_id() == g.next_node_id());
        CHECK(loaded.next_edge_id() == g.next_edge_id());

        DynamicGraph fresh = g;
        fresh.reset_activations();
        loaded.reset_activations();
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int step = 0; step < 5; ++step) {
            std::vector<double> obs(g.input_ids().size());
            for (double& v : obs) v = u(rng);
            auto a = fresh.forward(obs);
            auto b = loaded.forward(obs);
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
        }
        // round-trip the serialized text too
        DynamicGraph again = graph_from_json(nlohmann::json::parse(j.dump()));
        CHECK(graph_to_json(again) == j);
    }
}

TEST_CASE("restore: rejects malformed documents") {
    std::vector<Node> nodes{{0, NodeRole::Input, 0.0, 0.0, 0.0},
                            {1, NodeRole::Output, 0.0, 0.0, 0.0}};
    // non-delayed self-loop
    CHECK_THROWS_AS(DynamicGraph::restore(nodes, {{0, 1, 1, 0.1, false}}, {0}, {1}, 2, 1),
                    std::invalid_argument);
    // duplicate pair
    CHECK_THROWS_AS(DynamicGraph::restore(
                        nodes, {{0, 0, 1, 0.1, false}, {1, 0, 1, 0.2, false}}, {0}, {1}, 2, 2),
                    std::invalid_argument);
    // edge into input
    CHECK_THROWS_AS(DynamicGraph::restore(nodes, {{0, 1, 0, 0.1, false}}, {0}, {1}, 2, 1),
                    std::invalid_argument);
    // id outside counter range
    CHECK_THROWS_AS(DynamicGraph::restore(nodes, {{5, 0, 1, 0.1, false}}, {0}, {1}, 2, 1),
                    std::invalid_argument);
}

TEST_CASE("adjacency indices survive a long random edit fuzz") {
    std::mt19937_64 rng(41);
    DynamicGraph g(3, 2, 4, 0.5, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        double roll = u(rng);
        std::vector<EdgeId> eids;
        for (const auto& [id, e] : g.edges()) eids.push_back(id);
        if (roll < 0.4 && !eids.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, eids.size() - 1);
            g.insert_relay(eids[pick(rng)], 0.01);
        } else if (roll < 0.65) {
            std::vector<NodeId> ids;
            for (const auto& [id, n] : g.nodes()) ids.push_back(id);
            std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
            try {
                g.add_edge(ids[pick(rng)], ids[pick(rng)], 0.1);
            } catch (const std::invalid_argument&) {
            }
        } else if (roll < 0.85 && !eids.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, eids.size() - 1);
            g.remove_edge(eids[pick(rng)]);
        } else {
            std::vector<NodeId> hidden;
            for (const auto& [id, n] : g.nodes())
                if (n.role == NodeRole::Hidden) hidden.push_back(id);
            if (!hidden.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, hidden.size() - 1);
                g.remove_node(hidden[pick(rng)]);
            }
        }
        if (i % 10 == 0) g.repromote_delayed();
        g.check_invariants();
    }
}
