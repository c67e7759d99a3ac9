#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uavsched/instance.hpp"

namespace uavsched {

enum class VarKind { Binary, Continuous };
enum class Sense { LessEq, GreaterEq, Equal };

struct MilpVariable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = 0.0;  // +inf allowed
};

struct LinearTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

using LinearExpr = std::vector<LinearTerm>;

struct MilpConstraint {
  std::string name;
  LinearExpr expr;
  Sense sense = Sense::LessEq;
  double rhs = 0.0;
};

/// A maximization MILP. Names are unique; terms reference variables by
/// position in `variables`.
class MilpModel {
 public:
  std::size_t add_variable(std::string name, VarKind kind, double lower,
                           double upper);
  void add_constraint(std::string name, LinearExpr expr, Sense sense,
                      double rhs);
  void set_objective(LinearExpr expr) { objective_ = std::move(expr); }

  const std::vector<MilpVariable>& variables() const { return variables_; }
  const std::vector<MilpConstraint>& constraints() const { return constraints_; }
  const LinearExpr& objective() const { return objective_; }

  std::optional<std::size_t> find_variable(std::string_view name) const;
  std::size_t count_kind(VarKind kind) const;
  std::size_t count_prefix(std::string_view prefix) const;  // constraints

 private:
  std::vector<MilpVariable> variables_;
  std::vector<MilpConstraint> constraints_;
  LinearExpr objective_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Closed-form sizes of build_milp for n_tasks = N-1 and V vehicles.
///
/// Node set {0..N}: 0 and N are the start/end depot copies.
///   x_ijk  i != j in {0..N}                   (N+1) N V   binary
///   y_ik   i in {1..N-1}                      (N-1) V     binary
///   z_ik   i in {1..N}                        N V         continuous
///   c1_i   at most one vehicle per task       N-1
///   c2_i_k out-degree equals y                (N-1) V
///   c3     flow rows, two per (node, vehicle) 2 (N+1) V
///   c4     fleet departures / arrivals        2
///   c5_k   flight distance budget             V
///   c6     ordering (arcs 0..N-1 -> 1..N)     (N^2 - N + 1) V
/// z bounds (family 7) live in the Bounds section, not as rows.
struct MilpCounts {
  std::size_t x = 0, y = 0, z = 0;
  std::size_t c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;
  std::size_t constraints() const { return c1 + c2 + c3 + c4 + c5 + c6; }
  std::size_t variables() const { return x + y + z; }
};

MilpCounts milp_counts(std::size_t n_tasks, std::size_t n_vehicles);

MilpModel build_milp(const Instance& instance);

/// CPLEX-style LP text (Maximize / Subject To / Bounds / Binaries / End).
/// Throws FormatError on duplicate or invalid names.
std::string export_lp(const MilpModel& model);

/// Reader for the LP subset written by export_lp.
MilpModel parse_lp(std::string_view text);

/// True if both models declare the same variables, objective and
/// constraints by name (term order and declaration order ignored).
// Coefficients, bounds and right-hand sides compare within rel_tol (exact by default).
bool equivalent(const MilpModel& a, const MilpModel& b, std::string* why = nullptr,
                double rel_tol = 0.0);

/// Evaluate every row, bound and integrality requirement at `values`.
/// Violations are tagged by family number ("1".."7") or "integrality".
ValidationReport check_assignment(const MilpModel& model,
                                  const std::vector<double>& values,
                                  double tol = 1e-9);

/// Translate a solution to an x/y/z point of build_milp(instance) and
/// check it. z_ik is the distance flown on arrival at node i (0 off-route).
ValidationReport milp_check(const Solution& solution, const Instance& instance);

}  // namespace uavsched
