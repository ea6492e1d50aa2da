#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace hemopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Sparse LP in the form
//   minimize    c'x
//   subject to  A_eq x  = b_eq
//               A_le x <= b_le
//               lb <= x <= ub        (entries may be +-inf)
// Variables are created in named groups; the groups partition the columns,
// which keeps solutions and debug dumps readable.
class LinearProgram {
public:
    struct Triplet {
        int row;
        int col;
        double value;
    };
    struct VarGroup {
        std::string name;
        int offset;
        int count;
    };

    int num_vars() const { return static_cast<int>(cost_.size()); }
    int num_eq_rows() const { return static_cast<int>(eq_rhs_.size()); }
    int num_le_rows() const { return static_cast<int>(le_rhs_.size()); }

    // Appends `count` variables; returns the first column index.
    int add_variables(const std::string& name, int count, double lb, double ub,
                      double cost = 0.0);

    void set_cost(int col, double cost) { cost_.at(col) = cost; }
    void add_cost(int col, double cost) { cost_.at(col) += cost; }
    void set_bounds(int col, double lb, double ub);

    int add_equality(double rhs);   // returns row index
    int add_inequality(double rhs); // sum coeff*x <= rhs
    void eq_coeff(int row, int col, double value);
    void le_coeff(int row, int col, double value);

    const std::vector<double>& cost() const { return cost_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<double>& eq_rhs() const { return eq_rhs_; }
    const std::vector<double>& le_rhs() const { return le_rhs_; }
    const std::vector<Triplet>& eq_triplets() const { return eq_; }
    const std::vector<Triplet>& le_triplets() const { return le_; }
    const std::vector<VarGroup>& groups() const { return groups_; }

    std::string var_name(int col) const;

    // Dimension and finiteness checks; throws ValidationError on a modeling bug.
    void validate() const;

private:
    std::vector<double> cost_, lower_, upper_;
    std::vector<double> eq_rhs_, le_rhs_;
    std::vector<Triplet> eq_, le_;
    std::vector<VarGroup> groups_;
};

enum class LpStatus { optimal, infeasible, error };

struct LpSolution {
    LpStatus status = LpStatus::error;
    std::vector<double> x;            // primal values, original columns
    double objective = 0.0;
    double max_primal_residual = 0.0; // max violation over rows and bounds
    double rel_duality_gap = 0.0;
    int iterations = 0;
    std::string message;              // diagnostics; names rows for infeasibility
};

struct LpSolverOptions {
    double feas_tol = 1e-8;  // scaled by (1 + ||b||_inf) resp. (1 + ||c||_inf)
    double gap_tol = 1e-9;   // relative duality gap
    int max_iterations = 200;
    bool phase1_fallback = true; // classify stalled solves with an elastic LP
};

// Deterministic primal-dual interior-point solve. Either converges to the
// stated tolerances, returns a certified infeasibility, or reports an error;
// it never silently returns a wrong answer.
LpSolution solve_lp(const LinearProgram& lp, const LpSolverOptions& opts = {});

// Debug dump in the CPLEX LP text interchange format.
void write_lp_format(const LinearProgram& lp, std::ostream& os);

} // namespace hemopt
