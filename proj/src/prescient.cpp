#include "hemopt/prescient.hpp"

#include "hemopt/accounting.hpp"
#include "hemopt/errors.hpp"
#include "hemopt/peak_tariff.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

namespace hemopt {

namespace {

constexpr double kPrune = 1e-9;

struct Node {
    std::vector<int> tiers; // assigned prefix, months 0..tiers.size()
    double bound = 0.0;
    bool evaluated = false;
    double lp_obj = 0.0;
    std::vector<double> z; // realized per-month metric of the relaxed solution
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.tiers > b.tiers;
    }
};

struct Incumbent {
    double cost = std::numeric_limits<double>::infinity();
    double lp_obj = 0.0;
    std::vector<int> tiers;
    std::vector<double> p, c, d, q;

    bool offer(double cand, double lp, const std::vector<int>& t, const FlowLp& F,
               const LpSolution& sol) {
        const bool better = cand < cost - kPrune;
        const bool tie = std::abs(cand - cost) <= kPrune && t < tiers;
        if (!better && !tie) return false;
        cost = cand;
        lp_obj = lp;
        tiers = t;
        p = F.powers(sol);
        c = F.charges(sol);
        d = F.discharges(sol);
        q = F.socs(sol);
        return true;
    }
};

struct Evaluator {
    const Scenario* s = nullptr;
    FlowOptions fopt;
    FlowBoundary boundary;
    int n_days = 0;
    SolveStats* stats = nullptr;

    struct Outcome {
        bool feasible = false;
        double lp_obj = 0.0;
        std::vector<double> z;
        FlowLp F;
        LpSolution sol;
    };

    Outcome solve(const std::vector<int>& prefix) const {
        TierAssignment a;
        a.tiers = prefix;
        a.tiers.resize(s->grid.num_months, TierAssignment::unconstrained);
        Outcome out;
        out.F = build_flow_lp(*s, 0, s->grid.periods, a, boundary, fopt);
        out.sol = solve_lp(out.F.lp);
        ++stats->lps_solved;
        if (out.sol.status == LpStatus::infeasible) return out;
        if (out.sol.status == LpStatus::error)
            throw std::runtime_error("prescient: LP solve failed: " + out.sol.message);
        out.feasible = true;
        out.lp_obj = out.sol.objective;
        const auto p = out.F.powers(out.sol);
        out.z.resize(s->grid.num_months);
        for (int k = 0; k < s->grid.num_months; ++k)
            out.z[k] = monthly_peak_metric(daily_max_vector(p, s->grid, k), n_days);
        return out;
    }
};

double beta_sum(const std::vector<int>& tiers, const std::vector<double>& costs) {
    double b = 0.0;
    for (const int t : tiers) b += costs[t - 1];
    return b;
}

PlanResult package(const Incumbent& inc, SolveStats stats, double elapsed) {
    PlanResult r;
    r.p = inc.p;
    r.c = inc.c;
    r.d = inc.d;
    r.q = inc.q;
    r.assignment.tiers = inc.tiers;
    r.objective.energy = inc.lp_obj;
    r.objective.peak = inc.cost - inc.lp_obj;
    r.objective.total = inc.cost;
    stats.wall_seconds = elapsed;
    r.stats = stats;
    return r;
}

} // namespace

PlanResult solve_prescient(const Scenario& s, const PrescientOptions& options) {
    require_valid(s);
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    const int K = s.grid.num_months;
    const int L = s.peak.num_tiers();
    const auto& beta = s.peak.costs;
    const double beta1 = beta.front();

    SolveStats stats;
    Evaluator ev;
    ev.s = &s;
    ev.fopt.surrogate_n = options.surrogate_n;
    ev.boundary = FlowBoundary{s.storage.initial_kwh, s.storage.final_kwh, {}, 0.0};
    ev.n_days = options.surrogate_n > 0 ? options.surrogate_n : s.peak.n_days;
    ev.stats = &stats;

    // Root relaxation: every month unconstrained.
    const auto root = ev.solve({});
    if (!root.feasible)
        throw InfeasibleError("prescient: scenario infeasible: " + root.sol.message);

    // Incumbent seed: round each month's realized metric up to its tier.
    Incumbent inc;
    {
        std::vector<int> seed(K);
        for (int k = 0; k < K; ++k) seed[k] = tier_of(root.z[k], s.peak);
        const auto r = ev.solve(seed);
        if (!r.feasible)
            throw std::runtime_error("prescient: seed assignment unexpectedly infeasible");
        inc.offer(r.lp_obj + beta_sum(seed, beta), r.lp_obj, seed, r.F, r.sol);
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push({{}, root.lp_obj + K * beta1, true, root.lp_obj, root.z});

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        ++stats.nodes_explored;
        if (node.bound >= inc.cost - kPrune) break;
        if (options.time_budget_seconds > 0.0 && elapsed() > options.time_budget_seconds) {
            stats.exact = false;
            stats.bound_gap = inc.cost - node.bound;
            break;
        }

        if (!node.evaluated) {
            const auto r = ev.solve(node.tiers);
            if (!r.feasible) continue;
            const int j = static_cast<int>(node.tiers.size());
            const double bound = r.lp_obj + beta_sum(node.tiers, beta) + (K - j) * beta1;
            if (j == K) {
                inc.offer(bound, r.lp_obj, node.tiers, r.F, r.sol);
                continue;
            }
            if (bound >= inc.cost - kPrune) continue;
            open.push({std::move(node.tiers), bound, true, r.lp_obj, r.z});
            continue;
        }

        const int j = static_cast<int>(node.tiers.size());
        if (j == K) {
            // Complete and evaluated nodes are folded into the incumbent at
            // evaluation time; nothing reaches here, but stay safe.
            continue;
        }

        const int t0 = tier_of(node.z[j], s.peak);
        // Tiers at or above the relaxed metric keep the parent's solution
        // feasible, so their LP can wait until the node is popped.
        for (int t = t0; t <= L; ++t) {
            auto tiers = node.tiers;
            tiers.push_back(t);
            const double bound = node.lp_obj + beta_sum(tiers, beta) + (K - j - 1) * beta1;
            if (bound >= inc.cost - kPrune) continue;
            open.push({std::move(tiers), bound, false, 0.0, {}});
        }
        // Tighter tiers can be infeasible; walk down until the first one is.
        for (int t = t0 - 1; t >= 1; --t) {
            auto tiers = node.tiers;
            tiers.push_back(t);
            const auto r = ev.solve(tiers);
            if (!r.feasible) break;
            const double bound = r.lp_obj + beta_sum(tiers, beta) + (K - j - 1) * beta1;
            if (static_cast<int>(tiers.size()) == K) {
                inc.offer(bound, r.lp_obj, tiers, r.F, r.sol);
                continue;
            }
            if (bound >= inc.cost - kPrune) continue;
            open.push({std::move(tiers), bound, true, r.lp_obj, r.z});
        }
    }

    return package(inc, stats, elapsed());
}

PlanResult enumerate_exact(const Scenario& s, long long cap) {
    require_valid(s);
    const auto t_start = std::chrono::steady_clock::now();

    const int K = s.grid.num_months;
    const int L = s.peak.num_tiers();
    long long count = 1;
    for (int k = 0; k < K; ++k) {
        count *= L;
        if (count > cap)
            throw ValidationError("enumerate_exact: " + std::to_string(K) + " months x " +
                                  std::to_string(L) + " tiers exceeds the cap of " +
                                  std::to_string(cap) + " assignments");
    }

    SolveStats stats;
    Evaluator ev;
    ev.s = &s;
    ev.fopt = {};
    ev.boundary = FlowBoundary{s.storage.initial_kwh, s.storage.final_kwh, {}, 0.0};
    ev.n_days = s.peak.n_days;
    ev.stats = &stats;

    Incumbent inc;
    std::vector<int> tiers(K, 1);
    for (long long i = 0; i < count; ++i) {
        ++stats.nodes_explored;
        const auto r = ev.solve(tiers);
        if (r.feasible) inc.offer(r.lp_obj + beta_sum(tiers, s.peak.costs), r.lp_obj, tiers, r.F, r.sol);
        // Odometer increment, last month fastest.
        for (int k = K - 1; k >= 0; --k) {
            if (++tiers[k] <= L) break;
            tiers[k] = 1;
        }
    }
    if (!std::isfinite(inc.cost))
        throw InfeasibleError("enumerate_exact: every tier assignment is infeasible");

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return package(inc, stats, elapsed);
}

std::vector<CapacityPoint> sweep_capacity(const Scenario& s, std::span<const double> capacities,
                                          const PrescientOptions& options) {
    for (const double q : capacities)
        if (!(q >= 0.0)) throw ValidationError("sweep_capacity: capacities must be >= 0");

    const double base = baseline_no_storage(s).totals.total;
    std::vector<CapacityPoint> out;
    for (const double q : capacities) {
        Scenario sq = s;
        sq.storage.capacity_kwh = q;
        sq.storage.initial_kwh = q / 2.0;
        sq.storage.final_kwh = q / 2.0;
        const auto plan = solve_prescient(sq, options);
        CapacityPoint pt;
        pt.capacity_kwh = q;
        pt.total_nok = plan.objective.total;
        pt.savings_pct = base > 0.0 ? 100.0 * (base - plan.objective.total) / base : 0.0;
        out.push_back(pt);
    }
    return out;
}

} // namespace hemopt
