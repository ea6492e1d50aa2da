#include <doctest.h>

#include "hemopt/lp.hpp"
#include "hemopt/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace hemopt;

TEST_CASE("box-only problems solve coordinatewise") {
    LinearProgram lp;
    lp.add_variables("x", 3, 0.0, 5.0);
    lp.set_cost(0, -1.0);
    lp.set_cost(1, 2.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(5.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
    CHECK(sol.objective == doctest::Approx(-5.0));
}

TEST_CASE("small equality problem") {
    // min x - y  s.t. x + y = 10, 0 <= x,y <= 8  ->  x=2, y=8.
    LinearProgram lp;
    const int x = lp.add_variables("x", 1, 0.0, 8.0, 1.0);
    const int y = lp.add_variables("y", 1, 0.0, 8.0, -1.0);
    const int r = lp.add_equality(10.0);
    lp.eq_coeff(r, x, 1.0);
    lp.eq_coeff(r, y, 1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(-6.0).epsilon(1e-8));
    CHECK(sol.x[x] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(sol.x[y] == doctest::Approx(8.0).epsilon(1e-6));
    CHECK(sol.max_primal_residual <= 1e-7);
    CHECK(sol.rel_duality_gap <= 1e-8);
}

TEST_CASE("small inequality problem") {
    // min -x - 2y  s.t. x + y <= 4, 0 <= x,y <= 3  ->  x=1, y=3.
    LinearProgram lp;
    const int x = lp.add_variables("x", 1, 0.0, 3.0, -1.0);
    const int y = lp.add_variables("y", 1, 0.0, 3.0, -2.0);
    const int r = lp.add_inequality(4.0);
    lp.le_coeff(r, x, 1.0);
    lp.le_coeff(r, y, 1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(-7.0).epsilon(1e-8));
    CHECK(sol.x[y] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("free variables split transparently") {
    // min x  s.t. -x <= 3, x free  ->  x = -3.
    LinearProgram lp;
    const int x = lp.add_variables("x", 1, -kInf, kInf, 1.0);
    const int r = lp.add_inequality(3.0);
    lp.le_coeff(r, x, -1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[x] == doctest::Approx(-3.0).epsilon(1e-7));
}

TEST_CASE("fixed variables are presolved") {
    LinearProgram lp;
    const int x = lp.add_variables("x", 1, 2.0, 2.0, 10.0);
    const int y = lp.add_variables("y", 1, 0.0, 10.0, 1.0);
    const int r = lp.add_equality(5.0);
    lp.eq_coeff(r, x, 1.0);
    lp.eq_coeff(r, y, 1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[x] == doctest::Approx(2.0));
    CHECK(sol.x[y] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(23.0).epsilon(1e-7));

    // All variables fixed: feasibility decided directly.
    LinearProgram lp2;
    const int a = lp2.add_variables("a", 2, 1.5, 1.5, 1.0);
    const int r2 = lp2.add_equality(3.0);
    lp2.eq_coeff(r2, a, 1.0);
    lp2.eq_coeff(r2, a + 1, 1.0);
    const auto s2 = solve_lp(lp2);
    REQUIRE(s2.status == LpStatus::optimal);
    CHECK(s2.objective == doctest::Approx(3.0));

    LinearProgram lp3;
    const int b = lp3.add_variables("b", 1, 1.5, 1.5);
    const int r3 = lp3.add_equality(9.0);
    lp3.eq_coeff(r3, b, 1.0);
    CHECK(solve_lp(lp3).status == LpStatus::infeasible);
}

TEST_CASE("infeasible problems are classified, not mis-solved") {
    // x + y = 10 but both capped at 4.
    LinearProgram lp;
    const int x = lp.add_variables("x", 2, 0.0, 4.0);
    const int r = lp.add_equality(10.0);
    lp.eq_coeff(r, x, 1.0);
    lp.eq_coeff(r, x + 1, 1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::infeasible);
    CHECK(sol.message.find("eq0") != std::string::npos);

    // Contradictory equalities.
    LinearProgram lp2;
    const int y = lp2.add_variables("y", 2, -10.0, 10.0);
    const int r1 = lp2.add_equality(1.0);
    const int r2 = lp2.add_equality(6.0);
    for (int j = 0; j < 2; ++j) {
        lp2.eq_coeff(r1, y + j, 1.0);
        lp2.eq_coeff(r2, y + j, 1.0);
    }
    CHECK(solve_lp(lp2).status == LpStatus::infeasible);

    // Empty bound interval short-circuits.
    LinearProgram lp3;
    lp3.add_variables("z", 1, 3.0, 2.0);
    const auto s3 = solve_lp(lp3);
    CHECK(s3.status == LpStatus::infeasible);
    CHECK(s3.message.find("z") != std::string::npos);
}

TEST_CASE("unbounded objectives surface as errors, not as answers") {
    LinearProgram lp;
    lp.add_variables("x", 1, -kInf, kInf, 1.0);
    CHECK(solve_lp(lp).status == LpStatus::error);

    // Same but with an unrelated constraint so the interior-point path runs.
    LinearProgram lp2;
    const int x = lp2.add_variables("x", 1, 0.0, kInf, -1.0);
    const int y = lp2.add_variables("y", 1, 0.0, 1.0);
    const int r = lp2.add_equality(0.5);
    lp2.eq_coeff(r, y, 1.0);
    (void)x;
    CHECK(solve_lp(lp2).status == LpStatus::error);
}

TEST_CASE("duplicate rows do not break the factorization") {
    LinearProgram lp;
    const int x = lp.add_variables("x", 2, 0.0, 10.0, 1.0);
    const int r1 = lp.add_equality(4.0);
    const int r2 = lp.add_equality(8.0);
    lp.eq_coeff(r1, x, 1.0);
    lp.eq_coeff(r1, x + 1, 1.0);
    lp.eq_coeff(r2, x, 2.0);
    lp.eq_coeff(r2, x + 1, 2.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("selection problem with many active bounds") {
    // min sum(price_t * p_t), p in [0,1]^n, sum p = 100: picks the 100 cheapest.
    const int n = 500;
    std::mt19937 rng(41);
    std::vector<double> price(n);
    for (auto& v : price) v = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    LinearProgram lp;
    const int p = lp.add_variables("p", n, 0.0, 1.0);
    for (int j = 0; j < n; ++j) lp.set_cost(p + j, price[j]);
    const int r = lp.add_equality(100.0);
    for (int j = 0; j < n; ++j) lp.eq_coeff(r, p + j, 1.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    auto sorted = price;
    std::sort(sorted.begin(), sorted.end());
    const double want = std::accumulate(sorted.begin(), sorted.begin() + 100, 0.0);
    CHECK(sol.objective == doctest::Approx(want).epsilon(1e-7));
    CHECK(sol.max_primal_residual <= 1e-6);
}

namespace {

struct DenseLp {
    int n = 0;
    Eigen::MatrixXd Ae, Al;
    Eigen::VectorXd be, bl, c, lo, hi;
};

// Exhaustive vertex enumeration oracle for tiny box-bounded LPs: the optimum
// of a bounded feasible LP sits at a vertex, i.e. at n linearly independent
// active constraints drawn from {eq rows} + {le rows} + {bounds}.
struct OracleResult {
    bool feasible = false;
    double objective = 0.0;
};

OracleResult vertex_oracle(const DenseLp& d) {
    const int me = static_cast<int>(d.be.size());
    const int ml = static_cast<int>(d.bl.size());
    struct Row {
        Eigen::VectorXd a;
        double b;
    };
    std::vector<Row> cands;
    for (int i = 0; i < ml; ++i) cands.push_back({d.Al.row(i), d.bl[i]});
    for (int j = 0; j < d.n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d.n);
        e[j] = 1.0;
        cands.push_back({e, d.lo[j]});
        cands.push_back({e, d.hi[j]});
    }
    const int need = d.n - me;
    OracleResult best;
    std::vector<int> idx(need);
    const int nc = static_cast<int>(cands.size());

    auto try_vertex = [&]() {
        Eigen::MatrixXd M(d.n, d.n);
        Eigen::VectorXd rhs(d.n);
        for (int i = 0; i < me; ++i) {
            M.row(i) = d.Ae.row(i);
            rhs[i] = d.be[i];
        }
        for (int i = 0; i < need; ++i) {
            M.row(me + i) = cands[idx[i]].a.transpose();
            rhs[me + i] = cands[idx[i]].b;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (!lu.isInvertible()) return;
        const Eigen::VectorXd x = lu.solve(rhs);
        const double tol = 1e-7;
        for (int j = 0; j < d.n; ++j)
            if (x[j] < d.lo[j] - tol || x[j] > d.hi[j] + tol) return;
        for (int i = 0; i < me; ++i)
            if (std::abs(d.Ae.row(i).dot(x) - d.be[i]) > tol) return;
        for (int i = 0; i < ml; ++i)
            if (d.Al.row(i).dot(x) - d.bl[i] > tol) return;
        const double obj = d.c.dot(x);
        if (!best.feasible || obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
        }
    };

    // need <= n is small; enumerate all index combinations.
    std::vector<int> comb(need);
    auto rec = [&](auto&& self, int pos, int start) -> void {
        if (pos == need) {
            idx = comb;
            try_vertex();
            return;
        }
        for (int i = start; i < nc; ++i) {
            comb[pos] = i;
            self(self, pos + 1, i + 1);
        }
    };
    if (need == 0) {
        idx.clear();
        try_vertex();
    } else {
        rec(rec, 0, 0);
    }
    return best;
}

} // namespace

TEST_CASE("random boxed LPs agree with the vertex-enumeration oracle") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    std::uniform_int_distribution<int> nd(2, 5), med(0, 2), mld(0, 3);
    int infeasible_seen = 0;

    for (int rep = 0; rep < 150; ++rep) {
        DenseLp d;
        d.n = nd(rng);
        const int me = std::min(med(rng), d.n - 1);
        const int ml = mld(rng);
        d.lo.resize(d.n);
        d.hi.resize(d.n);
        d.c.resize(d.n);
        Eigen::VectorXd x0(d.n);
        for (int j = 0; j < d.n; ++j) {
            d.lo[j] = -1.0 - std::abs(un(rng));
            d.hi[j] = 1.0 + std::abs(un(rng));
            d.c[j] = un(rng) * 3.0;
            x0[j] = d.lo[j] + (d.hi[j] - d.lo[j]) * (0.5 + 0.4 * un(rng));
        }
        d.Ae.resize(me, d.n);
        d.be.resize(me);
        for (int i = 0; i < me; ++i) {
            for (int j = 0; j < d.n; ++j) d.Ae(i, j) = un(rng);
            d.be[i] = d.Ae.row(i).dot(x0); // feasible at x0 by construction
        }
        d.Al.resize(ml, d.n);
        d.bl.resize(ml);
        for (int i = 0; i < ml; ++i) {
            for (int j = 0; j < d.n; ++j) d.Al(i, j) = un(rng);
            d.bl[i] = d.Al.row(i).dot(x0) + 0.1 + std::abs(un(rng));
        }
        // Every few instances, break feasibility on purpose.
        const bool force_infeasible = rep % 7 == 3 && me > 0;
        if (force_infeasible) d.be[0] += 50.0;

        LinearProgram lp;
        const int v = lp.add_variables("v", d.n, 0.0, 0.0);
        for (int j = 0; j < d.n; ++j) {
            lp.set_bounds(v + j, d.lo[j], d.hi[j]);
            lp.set_cost(v + j, d.c[j]);
        }
        for (int i = 0; i < me; ++i) {
            const int r = lp.add_equality(d.be[i]);
            for (int j = 0; j < d.n; ++j)
                if (d.Ae(i, j) != 0.0) lp.eq_coeff(r, v + j, d.Ae(i, j));
        }
        for (int i = 0; i < ml; ++i) {
            const int r = lp.add_inequality(d.bl[i]);
            for (int j = 0; j < d.n; ++j)
                if (d.Al(i, j) != 0.0) lp.le_coeff(r, v + j, d.Al(i, j));
        }

        const auto oracle = vertex_oracle(d);
        const auto sol = solve_lp(lp);
        INFO("instance ", rep, " n=", d.n, " me=", me, " ml=", ml, ": ", sol.message);
        if (oracle.feasible) {
            REQUIRE(sol.status == LpStatus::optimal);
            CHECK(sol.objective ==
                  doctest::Approx(oracle.objective).epsilon(1e-6).scale(1.0));
            CHECK(sol.max_primal_residual <= 1e-6);
        } else {
            ++infeasible_seen;
            REQUIRE(sol.status == LpStatus::infeasible);
        }
    }
    CHECK(infeasible_seen >= 10);
}

TEST_CASE("validation catches malformed programs") {
    LinearProgram lp;
    const int x = lp.add_variables("x", 1, 0.0, 1.0);
    CHECK_THROWS_AS(lp.add_variables("x", 1, 0.0, 1.0), ValidationError);
    const int r = lp.add_equality(1.0);
    lp.eq_coeff(r, x + 5, 1.0); // out of range column
    CHECK_THROWS_AS(lp.validate(), ValidationError);
}

TEST_CASE("text dump names variables and rows") {
    LinearProgram lp;
    const int p = lp.add_variables("p", 2, 0.0, 20.0, 1.5);
    const int q = lp.add_variables("q_end", 1, 5.0, 5.0);
    const int r = lp.add_equality(7.0);
    lp.eq_coeff(r, p, 1.0);
    lp.eq_coeff(r, q, -1.0);
    const int s = lp.add_inequality(3.0);
    lp.le_coeff(s, p + 1, 2.0);
    std::ostringstream os;
    write_lp_format(lp, os);
    const std::string text = os.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("p_0") != std::string::npos);
    CHECK(text.find("q_end") != std::string::npos);
    CHECK(text.find("eq0:") != std::string::npos);
    CHECK(text.find("le0:") != std::string::npos);
    CHECK(text.find("<= 3") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}
