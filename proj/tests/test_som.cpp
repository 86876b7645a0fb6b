#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "caisson/rng.hpp"
#include "caisson/som.hpp"
#include "fixtures.hpp"

using namespace caisson;

namespace {

std::vector<float> basis_vector(int dim, int axis) {
    std::vector<float> v(size_t(dim), 0.0f);
    v[size_t(axis)] = 1.0f;
    return v;
}

std::vector<SomEntry> random_entries(int count, int dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<SomEntry> out;
    for (int i = 0; i < count; ++i) {
        SomEntry e;
        e.id = "doc-" + std::to_string(i);
        e.vec.resize(size_t(dim));
        for (float& x : e.vec) x = float(rng.normal());
        out.push_back(std::move(e));
    }
    return out;
}

// independent oracle for BMU: plain linear scan with double accumulation
int naive_bmu(const SomGrid& grid, const std::vector<float>& x) {
    int best = 0;
    double best_d = 1e300;
    for (int i = 0; i < grid.cell_count(); ++i) {
        auto w = grid.weight(i);
        double d = 0.0;
        for (size_t j = 0; j < w.size(); ++j) {
            double diff = double(w[j]) - double(x[j]);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("grid initialization: shape, emptiness, determinism, bounds") {
    SomParams p;
    p.n = 10;
    p.dim = 434;
    p.seed = 5;
    SomGrid g = SomGrid::init(p);
    CHECK(g.cell_count() == 100);
    CHECK(g.stored_count() == 0);
    for (int i = 0; i < g.cell_count(); ++i) CHECK(g.collection(i).empty());
    for (float w : g.raw_weights()) {
        CHECK(w >= -0.1f);
        CHECK(w <= 0.1f);
    }

    SomGrid g2 = SomGrid::init(p);
    CHECK(g.raw_weights() == g2.raw_weights());

    SomParams small;
    small.n = 2;
    small.dim = 3;
    SomGrid s = SomGrid::init(small);
    CHECK(s.cell_count() == 4);
    CHECK(s.weight(0).size() == 3);

    SomParams bad = p;
    bad.n = 1;
    CHECK_THROWS_AS(SomGrid::init(bad), ValidationError);
}

TEST_CASE("find_bmu: exact matches, hand-built table, tie-break, oracle") {
    SomParams p;
    p.n = 2;
    p.dim = 4;
    p.seed = 1;
    SomGrid g = SomGrid::init(p);

    // overwrite weights with the four basis vectors through restore
    std::vector<float> weights;
    for (int axis = 0; axis < 4; ++axis) {
        auto e = basis_vector(4, axis);
        weights.insert(weights.end(), e.begin(), e.end());
    }
    g = SomGrid::restore(p, weights, std::vector<std::vector<SomEntry>>(4), false);

    // x equal to a node's weight -> that node at distance zero
    for (int axis = 0; axis < 4; ++axis) CHECK(g.find_bmu(basis_vector(4, axis)) == axis);
    // brute-force distance table agrees: e2 -> node index 1
    CHECK(g.find_bmu(basis_vector(4, 1)) == 1);

    // all-equal weights: smallest row-major index wins
    std::vector<float> equal(16, 0.25f);
    SomGrid tied = SomGrid::restore(p, equal, std::vector<std::vector<SomEntry>>(4), false);
    CHECK(tied.find_bmu(basis_vector(4, 2)) == 0);

    CHECK_THROWS_AS(g.find_bmu(basis_vector(3, 0)), ValidationError);

    // oracle equivalence on 1000 random queries
    SomParams big;
    big.n = 7;
    big.dim = 24;
    big.seed = 77;
    SomGrid random_grid = SomGrid::init(big);
    Rng rng(123);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<float> x(24);
        for (float& v : x) v = float(rng.normal());
        CHECK(random_grid.find_bmu(x) == naive_bmu(random_grid, x));
    }
}

TEST_CASE("schedule formulas match hand-computed values") {
    // alpha(0) = alpha0; alpha(T) with gamma = 0.8 -> 0.2 * alpha0
    CHECK(learning_rate(0.05, 0.8, 0, 150) == Catch::Approx(0.05).margin(1e-9));
    CHECK(learning_rate(0.05, 0.8, 150, 150) == Catch::Approx(0.01).margin(1e-9));
    CHECK(learning_rate(0.05, 0.8, 75, 150) == Catch::Approx(0.05 * 0.6).margin(1e-9));

    // sigma decay
    CHECK(neighborhood_sigma(5.0, 0.02, 0) == Catch::Approx(5.0).margin(1e-9));
    CHECK(neighborhood_sigma(5.0, 0.02, 50) == Catch::Approx(5.0 * std::exp(-1.0)).margin(1e-9));

    // h at the winner equals alpha (exp(0) = 1); unit grid distance decays it
    CHECK(neighborhood_influence(0.05, 0.0, 2.0) == Catch::Approx(0.05).margin(1e-12));
    CHECK(neighborhood_influence(0.05, 1.0, 2.0) ==
          Catch::Approx(0.05 * std::exp(-1.0 / 8.0)).margin(1e-12));
}

TEST_CASE("single-step update contracts the winner toward the input") {
    SomParams p;
    p.n = 3;
    p.dim = 8;
    p.seed = 3;
    p.epochs = 10;
    SomGrid g = SomGrid::init(p);

    std::vector<SomEntry> one = random_entries(1, 8, 42);
    int before_bmu = g.find_bmu(one[0].vec);
    double before = 0.0;
    {
        auto w = g.weight(before_bmu);
        for (size_t j = 0; j < w.size(); ++j)
            before += (w[j] - one[0].vec[j]) * (w[j] - one[0].vec[j]);
    }
    std::vector<const SomEntry*> order{&one[0]};
    g.train_epoch(order, 0);
    double after = 0.0;
    {
        auto w = g.weight(before_bmu);
        for (size_t j = 0; j < w.size(); ++j)
            after += (w[j] - one[0].vec[j]) * (w[j] - one[0].vec[j]);
    }
    CHECK(after <= before);

    CHECK_THROWS_AS(g.train_epoch(order, 10), ValidationError);
}

TEST_CASE("training converges and stores a clean partition") {
    SomParams p;
    p.n = 5;
    p.dim = 16;
    p.seed = 8;
    p.epochs = 40;
    SomGrid g = SomGrid::init(p);

    std::vector<SomEntry> corpus = random_entries(300, 16, 9);
    TrainingTrace trace = g.train(corpus);
    REQUIRE(trace.quantization_errors.size() == 40);
    REQUIRE(trace.epoch_millis.size() == 40);

    // Q falls over training
    CHECK(trace.quantization_errors.back() < trace.quantization_errors.front());
    double first10 = 0.0, last10 = 0.0;
    for (int i = 0; i < 10; ++i) {
        first10 += trace.quantization_errors[size_t(i)];
        last10 += trace.quantization_errors[size_t(40 - 10 + i)];
    }
    CHECK(last10 < first10);

    // storage partition: every id in exactly one collection
    CHECK(g.trained());
    std::set<std::string> seen;
    for (int node = 0; node < g.cell_count(); ++node)
        for (const SomEntry& e : g.collection(node)) CHECK(seen.insert(e.id).second);
    CHECK(seen.size() == corpus.size());

    CHECK_THROWS_AS(g.train({}), ValidationError);
}

TEST_CASE("degenerate corpus of identical vectors quantizes to ~zero error") {
    SomParams p;
    p.n = 3;
    p.dim = 6;
    p.seed = 2;
    p.epochs = 60;
    SomGrid g = SomGrid::init(p);

    std::vector<SomEntry> corpus;
    std::vector<float> x{0.4f, -0.2f, 0.9f, 0.0f, 0.3f, -0.5f};
    for (int i = 0; i < 50; ++i) corpus.push_back({"dup-" + std::to_string(i), x});
    TrainingTrace trace = g.train(corpus);
    CHECK(trace.quantization_errors.back() < 1e-5);
}

TEST_CASE("neighborhood search honors the Chebyshev radius") {
    SomParams p;
    p.n = 5;
    p.dim = 4;
    p.seed = 14;
    p.epochs = 15;
    SomGrid g = SomGrid::init(p);
    CHECK_THROWS_AS(g.neighborhood_search(basis_vector(4, 0), 1), ValidationError);

    std::vector<SomEntry> corpus = random_entries(200, 4, 15);
    g.train(corpus);

    std::vector<float> q = corpus[7].vec;
    int bmu = g.find_bmu(q);
    auto [br, bc] = g.grid_pos(bmu);

    // radius 0: exactly the BMU's collection
    auto r0 = g.neighborhood_search(q, 0);
    CHECK(r0.size() == g.collection(bmu).size());

    // radius n-1: the whole corpus
    auto full_cover = g.neighborhood_search(q, 4);
    CHECK(full_cover.size() == corpus.size());

    // radius 1: the union of the Chebyshev ball's collections, at most 9 nodes
    auto r1 = g.neighborhood_search(q, 1);
    size_t expected = 0;
    int cells = 0;
    for (int r = std::max(0, br - 1); r <= std::min(4, br + 1); ++r)
        for (int c = std::max(0, bc - 1); c <= std::min(4, bc + 1); ++c) {
            expected += g.collection(r * 5 + c).size();
            ++cells;
        }
    CHECK(cells <= 9);
    CHECK(r1.size() == expected);

    CHECK_THROWS_AS(g.neighborhood_search(q, -1), ValidationError);
}

TEST_CASE("training is reproducible under the grid seed") {
    SomParams p;
    p.n = 4;
    p.dim = 8;
    p.seed = 21;
    p.epochs = 12;
    std::vector<SomEntry> corpus = random_entries(120, 8, 5);

    SomGrid a = SomGrid::init(p);
    SomGrid b = SomGrid::init(p);
    TrainingTrace ta = a.train(corpus);
    TrainingTrace tb = b.train(corpus);
    CHECK(a.raw_weights() == b.raw_weights());
    CHECK(ta.quantization_errors == tb.quantization_errors);
}
