#include "uavsched/milp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "uavsched/error.hpp"
#include "uavsched/io.hpp"

namespace uavsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string xname(int i, int j, int k) {
  return "x_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(k);
}
std::string yname(int i, int k) {
  return "y_" + std::to_string(i) + "_" + std::to_string(k);
}
std::string zname(int i, int k) {
  return "z_" + std::to_string(i) + "_" + std::to_string(k);
}

bool valid_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  if (std::isdigit(static_cast<unsigned char>(name[0])) || name[0] == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

}  // namespace

std::size_t MilpModel::add_variable(std::string name, VarKind kind,
                                    double lower, double upper) {
  auto [it, inserted] = index_.emplace(name, variables_.size());
  if (!inserted) throw ArgumentError("duplicate variable name " + name);
  variables_.push_back({std::move(name), kind, lower, upper});
  return it->second;
}

void MilpModel::add_constraint(std::string name, LinearExpr expr, Sense sense,
                               double rhs) {
  for (const auto& t : expr) {
    if (t.var >= variables_.size()) {
      throw ContractError("constraint " + name + " references an undeclared variable");
    }
  }
  constraints_.push_back({std::move(name), std::move(expr), sense, rhs});
}

std::optional<std::size_t> MilpModel::find_variable(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t MilpModel::count_kind(VarKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      variables_.begin(), variables_.end(),
      [kind](const MilpVariable& v) { return v.kind == kind; }));
}

std::size_t MilpModel::count_prefix(std::string_view prefix) const {
  return static_cast<std::size_t>(std::count_if(
      constraints_.begin(), constraints_.end(), [prefix](const MilpConstraint& c) {
        return std::string_view(c.name).substr(0, prefix.size()) == prefix;
      }));
}

MilpCounts milp_counts(std::size_t n_tasks, std::size_t v) {
  const std::size_t n = n_tasks + 1;  // end-depot index N
  MilpCounts c;
  c.x = (n + 1) * n * v;
  c.y = (n - 1) * v;
  c.z = n * v;
  c.c1 = n - 1;
  c.c2 = (n - 1) * v;
  c.c3 = 2 * (n + 1) * v;
  c.c4 = 2;
  c.c5 = v;
  c.c6 = (n * n - n + 1) * v;
  return c;
}

MilpModel build_milp(const Instance& instance) {
  check_instance(instance);
  const int n = static_cast<int>(instance.n_tasks()) + 1;
  const int nv = instance.n_vehicles;
  const double budget = instance.budget;

  auto point = [&](int i) { return (i == 0 || i == n) ? instance.depot : instance.node(i); };
  auto dist = [&](int i, int j) { return distance(point(i), point(j)); };

  double max_d = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) max_d = std::max(max_d, dist(i, j));
  // Big-M of the ordering rows; must dominate z_i - z_j + d_ij.
  const double big_m = budget + max_d;

  MilpModel m;
  std::vector<std::size_t> x(static_cast<std::size_t>((n + 1) * (n + 1) * nv));
  auto xi = [&](int i, int j, int k) -> std::size_t& {
    return x[static_cast<std::size_t>((i * (n + 1) + j) * nv + (k - 1))];
  };
  for (int k = 1; k <= nv; ++k)
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        if (i != j) xi(i, j, k) = m.add_variable(xname(i, j, k), VarKind::Binary, 0, 1);

  std::vector<std::size_t> y(static_cast<std::size_t>((n + 1) * nv));
  auto yi = [&](int i, int k) -> std::size_t& { return y[static_cast<std::size_t>(i * nv + k - 1)]; };
  for (int k = 1; k <= nv; ++k)
    for (int i = 1; i <= n - 1; ++i) yi(i, k) = m.add_variable(yname(i, k), VarKind::Binary, 0, 1);

  std::vector<std::size_t> z(static_cast<std::size_t>((n + 1) * nv));
  auto zi = [&](int i, int k) -> std::size_t& { return z[static_cast<std::size_t>(i * nv + k - 1)]; };
  for (int k = 1; k <= nv; ++k)
    for (int i = 1; i <= n; ++i)
      zi(i, k) = m.add_variable(zname(i, k), VarKind::Continuous, 0.0,
                                std::max(0.0, budget - dist(i, 0)));

  LinearExpr obj;
  for (int i = 1; i <= n - 1; ++i)
    for (int k = 1; k <= nv; ++k) obj.push_back({yi(i, k), 1.0});
  m.set_objective(std::move(obj));

  auto out_arcs = [&](int i, int k) {
    LinearExpr e;
    for (int j = 1; j <= n; ++j)
      if (j != i) e.push_back({xi(i, j, k), 1.0});
    return e;
  };
  auto in_arcs = [&](int i, int k) {
    LinearExpr e;
    for (int j = 0; j <= n - 1; ++j)
      if (j != i) e.push_back({xi(j, i, k), 1.0});
    return e;
  };

  // (1) each task executed by at most one vehicle
  for (int i = 1; i <= n - 1; ++i) {
    LinearExpr e;
    for (int k = 1; k <= nv; ++k) e.push_back({yi(i, k), 1.0});
    m.add_constraint("c1_" + std::to_string(i), std::move(e), Sense::LessEq, 1.0);
  }
  // (2) leaving task i on vehicle k iff k executes i
  for (int k = 1; k <= nv; ++k)
    for (int i = 1; i <= n - 1; ++i) {
      auto e = out_arcs(i, k);
      e.push_back({yi(i, k), -1.0});
      m.add_constraint("c2_" + std::to_string(i) + "_" + std::to_string(k),
                       std::move(e), Sense::Equal, 0.0);
    }
  // (3) flow: tasks balance in/out with degree <= 1; the start copy has no
  // inbound arcs and the end copy no outbound arcs.
  for (int k = 1; k <= nv; ++k)
    for (int i = 0; i <= n; ++i) {
      const std::string tag = std::to_string(i) + "_" + std::to_string(k);
      if (i == 0) {
        m.add_constraint("c3_out_" + tag, out_arcs(0, k), Sense::LessEq, 1.0);
        LinearExpr e;
        for (int j = 1; j <= n; ++j) e.push_back({xi(j, 0, k), 1.0});
        m.add_constraint("c3_in_" + tag, std::move(e), Sense::Equal, 0.0);
      } else if (i == n) {
        m.add_constraint("c3_in_" + tag, in_arcs(n, k), Sense::LessEq, 1.0);
        LinearExpr e;
        for (int j = 0; j < n; ++j) e.push_back({xi(n, j, k), 1.0});
        m.add_constraint("c3_out_" + tag, std::move(e), Sense::Equal, 0.0);
      } else {
        auto e = out_arcs(i, k);
        for (auto t : in_arcs(i, k)) e.push_back({t.var, -1.0});
        m.add_constraint("c3_bal_" + tag, std::move(e), Sense::Equal, 0.0);
        m.add_constraint("c3_deg_" + tag, out_arcs(i, k), Sense::LessEq, 1.0);
      }
    }
  // (4) every vehicle departs from and returns to the depot (possibly idle,
  // via the 0 -> N arc).
  {
    LinearExpr dep, arr;
    for (int k = 1; k <= nv; ++k) {
      for (auto t : out_arcs(0, k)) dep.push_back(t);
      for (auto t : in_arcs(n, k)) arr.push_back(t);
    }
    m.add_constraint("c4_depart", std::move(dep), Sense::Equal, nv);
    m.add_constraint("c4_return", std::move(arr), Sense::Equal, nv);
  }
  // (5) flight distance
  for (int k = 1; k <= nv; ++k) {
    LinearExpr e;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j)
        if (i != j && dist(i, j) != 0.0) e.push_back({xi(i, j, k), dist(i, j)});
    m.add_constraint("c5_" + std::to_string(k), std::move(e), Sense::LessEq, budget);
  }
  // (6) ordering: x_ijk = 1 forces z_jk >= z_ik + d_ij; z at the start copy
  // is the constant 0.
  for (int k = 1; k <= nv; ++k)
    for (int i = 0; i <= n - 1; ++i)
      for (int j = 1; j <= n; ++j) {
        if (i == j) continue;
        LinearExpr e;
        if (i != 0) e.push_back({zi(i, k), 1.0});
        e.push_back({zi(j, k), -1.0});
        e.push_back({xi(i, j, k), big_m});
        m.add_constraint("c6_" + std::to_string(i) + "_" + std::to_string(j) + "_" +
                             std::to_string(k),
                         std::move(e), Sense::LessEq, big_m - dist(i, j));
      }
  return m;
}

// ---------------------------------------------------------------- LP writer

namespace {

void write_expr(std::ostringstream& os, const MilpModel& m, const LinearExpr& e,
                std::size_t indent) {
  std::size_t col = indent;
  bool first = true;
  for (const auto& t : e) {
    std::string term;
    const double mag = std::abs(t.coef);
    if (t.coef < 0) {
      term = "- ";
    } else if (!first) {
      term = "+ ";
    }
    if (mag != 1.0) term += format_real(mag) + " ";
    term += m.variables()[t.var].name;
    if (col + term.size() + 1 > 200) {
      os << "\n" << std::string(indent, ' ');
      col = indent;
    } else if (!first) {
      os << ' ';
      ++col;
    }
    os << term;
    col += term.size();
    first = false;
  }
  if (first) os << "0 " << m.variables().front().name;
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::LessEq: return "<=";
    case Sense::GreaterEq: return ">=";
    case Sense::Equal: return "=";
  }
  return "=";
}

}  // namespace

std::string export_lp(const MilpModel& model) {
  if (model.variables().empty()) throw FormatError("model has no variables");
  std::unordered_map<std::string_view, int> seen;
  for (const auto& v : model.variables()) {
    if (!valid_name(v.name)) throw FormatError("invalid LP name '" + v.name + "'");
    if (seen[v.name]++) throw FormatError("name collision: " + v.name);
  }
  for (const auto& c : model.constraints()) {
    if (!valid_name(c.name)) throw FormatError("invalid LP name '" + c.name + "'");
    if (seen[c.name]++) throw FormatError("name collision: " + c.name);
  }

  std::ostringstream os;
  os << "\\ uavsched task-scheduling model\n";
  os << "Maximize\n obj: ";
  write_expr(os, model, model.objective(), 6);
  os << "\nSubject To\n";
  for (const auto& c : model.constraints()) {
    os << " " << c.name << ": ";
    write_expr(os, model, c.expr, c.name.size() + 3);
    os << " " << sense_text(c.sense) << " " << format_real(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.kind != VarKind::Continuous) continue;
    os << " " << format_real(v.lower) << " <= " << v.name;
    if (std::isinf(v.upper)) {
      os << " <= +inf\n";
    } else {
      os << " <= " << format_real(v.upper) << "\n";
    }
  }
  os << "Binaries\n";
  std::size_t col = 0;
  for (const auto& v : model.variables()) {
    if (v.kind != VarKind::Binary) continue;
    if (col + v.name.size() + 1 > 200) {
      os << "\n";
      col = 0;
    }
    os << " " << v.name;
    col += v.name.size() + 1;
  }
  os << "\nEnd\n";
  return os.str();
}

// ---------------------------------------------------------------- LP reader

namespace {

// Unsupported marks sections other writers emit empty (generals, semi-continuous).
enum class Section { None, Objective, Constraints, Bounds, Binaries, Unsupported, End };

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_number(std::string_view tok, double& out) {
  const std::string l = lower(tok);
  if (l == "+inf" || l == "inf" || l == "+infinity" || l == "infinity") {
    out = kInf;
    return true;
  }
  if (l == "-inf" || l == "-infinity") {
    out = -kInf;
    return true;
  }
  const char* b = tok.data();
  if (!tok.empty() && tok[0] == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool is_relop(std::string_view t) {
  return t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">" || t == "=<" || t == "=>";
}

Sense relop_sense(std::string_view t) {
  if (t == "<=" || t == "<" || t == "=<") return Sense::LessEq;
  if (t == ">=" || t == ">" || t == "=>") return Sense::GreaterEq;
  return Sense::Equal;
}

// Whitespace tokenizer. Operators must be spaced, as export_lp writes them.
std::vector<std::string> lex(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\r') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

struct LpReader {
  MilpModel model;
  std::map<std::string, VarKind> kinds;
  std::map<std::string, std::pair<double, double>> bounds;

  struct RawRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    Sense sense;
    double rhs;
  };
  std::vector<std::pair<std::string, double>> objective;
  std::vector<RawRow> rows;
  std::vector<std::string> order;  // first appearance of variables
  std::map<std::string, bool> known;

  void note(const std::string& v) {
    if (!known[v]) {
      known[v] = true;
      order.push_back(v);
    }
  }

  // Parses [name:] terms [relop rhs] from a token stream.
  std::vector<std::pair<std::string, double>> terms(const std::vector<std::string>& toks,
                                                    std::size_t& i) {
    std::vector<std::pair<std::string, double>> out;
    double sign = 1.0, coef = 1.0;
    bool have_coef = false, have_sign = false;
    while (i < toks.size() && !is_relop(toks[i])) {
      const auto& t = toks[i++];
      double num = 0.0;
      if (t == "+" || t == "-") {
        if (have_sign || have_coef) throw FormatError("misplaced operator '" + t + "'");
        sign = t == "+" ? 1.0 : -1.0;
        have_sign = true;
      } else if (parse_number(t, num)) {
        if (have_coef) throw FormatError("two coefficients in a row near " + t);
        // "+1 y" is a signed coefficient, not a bare one
        if (t[0] == '+' || t[0] == '-') {
          if (have_sign) throw FormatError("misplaced operator near " + t);
          have_sign = true;
        }
        coef = num;
        have_coef = true;
      } else {
        if (!out.empty() && !have_sign) throw FormatError("missing operator before " + t);
        have_sign = false;
        note(t);
        out.emplace_back(t, sign * (have_coef ? coef : 1.0));
        sign = 1.0;
        coef = 1.0;
        have_coef = false;
      }
    }
    if (have_sign || have_coef) throw FormatError("dangling term in linear expression");
    return out;
  }
};

}  // namespace

MilpModel parse_lp(std::string_view text) {
  LpReader r;
  Section section = Section::None;
  std::vector<std::string> pending;  // tokens of the current statement

  auto finish_statement = [&](Section s) {
    if (pending.empty()) return;
    std::size_t i = 0;
    if (s == Section::Objective) {
      if (pending[0].back() == ':') ++i;
      r.objective = r.terms(pending, i);
    } else if (s == Section::Constraints) {
      std::string name;
      if (pending[0].back() == ':') {
        name = pending[0].substr(0, pending[0].size() - 1);
        ++i;
      }
      auto t = r.terms(pending, i);
      if (i + 2 != pending.size()) throw FormatError("malformed constraint " + name);
      double rhs = 0.0;
      if (!parse_number(pending[i + 1], rhs)) throw FormatError("bad rhs in " + name);
      r.rows.push_back({name, std::move(t), relop_sense(pending[i]), rhs});
    }
    pending.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (auto bs = line.find('\\'); bs != std::string_view::npos) line = line.substr(0, bs);
    auto toks = lex(line);
    if (toks.empty()) continue;

    const std::string head = lower(toks[0]);
    const std::string two = toks.size() >= 2 ? head + " " + lower(toks[1]) : head;
    Section next = section;
    bool is_header = true;
    if (head == "maximize" || head == "maximum" || head == "max") {
      next = Section::Objective;
    } else if (two == "subject to" || head == "st" || head == "s.t.") {
      next = Section::Constraints;
    } else if (head == "bounds") {
      next = Section::Bounds;
    } else if (head == "binaries" || head == "binary" || head == "bin") {
      next = Section::Binaries;
    } else if (head == "end") {
      next = Section::End;
    } else if (head == "general" || head == "generals" || head == "gen" || head == "semi" ||
               head == "semis" || head == "semi-continuous" || head == "sos") {
      next = Section::Unsupported;
    } else if (head == "minimize" || head == "minimum" || head == "min") {
      throw FormatError("unsupported LP section '" + toks[0] + "'");
    } else {
      is_header = false;
    }
    if (is_header) {
      finish_statement(section);
      section = next;
      continue;
    }

    switch (section) {
      case Section::Objective:
        pending.insert(pending.end(), toks.begin(), toks.end());
        break;
      case Section::Constraints:
        // A new statement starts with a "name:" label.
        if (toks[0].back() == ':' && !pending.empty()) finish_statement(section);
        pending.insert(pending.end(), toks.begin(), toks.end());
        break;
      case Section::Bounds: {
        double a = 0.0, b = 0.0;
        if (toks.size() == 5 && parse_number(toks[0], a) && parse_number(toks[4], b)) {
          r.note(toks[2]);
          r.bounds[toks[2]] = {a, b};
        } else if (toks.size() == 3 && parse_number(toks[2], b)) {
          r.note(toks[0]);
          auto& bd = r.bounds.try_emplace(toks[0], 0.0, kInf).first->second;
          const Sense s = relop_sense(toks[1]);
          if (s == Sense::LessEq) bd.second = b;
          else if (s == Sense::GreaterEq) bd.first = b;
          else bd = {b, b};
        } else if (toks.size() == 2 && lower(toks[1]) == "free") {
          r.note(toks[0]);
          r.bounds[toks[0]] = {-kInf, kInf};
        } else {
          throw FormatError("unsupported bound line: " + std::string(line));
        }
        break;
      }
      case Section::Binaries:
        for (const auto& t : toks) {
          r.note(t);
          r.kinds[t] = VarKind::Binary;
        }
        break;
      case Section::Unsupported:
        throw FormatError("only binary and continuous variables are supported: " + std::string(line));
      case Section::None:
        throw FormatError("content before the objective section");
      case Section::End:
        throw FormatError("content after End");
    }
  }
  finish_statement(section);
  if (section != Section::End) throw FormatError("missing End");

  MilpModel m;
  for (const auto& name : r.order) {
    const auto kind_it = r.kinds.find(name);
    const VarKind kind = kind_it == r.kinds.end() ? VarKind::Continuous : kind_it->second;
    auto bd = kind == VarKind::Binary ? std::pair<double, double>{0.0, 1.0}
                                      : std::pair<double, double>{0.0, kInf};
    if (auto it = r.bounds.find(name); it != r.bounds.end()) bd = it->second;
    m.add_variable(name, kind, bd.first, bd.second);
  }
  auto to_expr = [&](const std::vector<std::pair<std::string, double>>& terms) {
    LinearExpr e;
    for (const auto& [name, c] : terms) e.push_back({*m.find_variable(name), c});
    return e;
  };
  m.set_objective(to_expr(r.objective));
  for (const auto& row : r.rows) m.add_constraint(row.name, to_expr(row.terms), row.sense, row.rhs);
  return m;
}

namespace {

std::map<std::string, double> named_terms(const MilpModel& m, const LinearExpr& e) {
  std::map<std::string, double> out;
  for (const auto& t : e) {
    const auto& name = m.variables()[t.var].name;
    if (t.coef != 0.0) out[name] += t.coef;
  }
  return out;
}

bool close(double x, double y, double rel_tol) {
  return x == y || std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y));
}

bool same_terms(const std::map<std::string, double>& x, const std::map<std::string, double>& y,
                double rel_tol) {
  if (x.size() != y.size()) return false;
  for (auto ix = x.begin(), iy = y.begin(); ix != x.end(); ++ix, ++iy) {
    if (ix->first != iy->first || !close(ix->second, iy->second, rel_tol)) return false;
  }
  return true;
}

}  // namespace

bool equivalent(const MilpModel& a, const MilpModel& b, std::string* why, double rel_tol) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (a.variables().size() != b.variables().size()) return fail("variable count differs");
  for (const auto& va : a.variables()) {
    auto idx = b.find_variable(va.name);
    if (!idx) return fail("missing variable " + va.name);
    const auto& vb = b.variables()[*idx];
    if (va.kind != vb.kind || !close(va.lower, vb.lower, rel_tol) ||
        !close(va.upper, vb.upper, rel_tol)) {
      return fail("variable " + va.name + " differs");
    }
  }
  if (!same_terms(named_terms(a, a.objective()), named_terms(b, b.objective()), rel_tol)) {
    return fail("objective differs");
  }
  if (a.constraints().size() != b.constraints().size()) return fail("row count differs");
  std::map<std::string, const MilpConstraint*> rows_b;
  for (const auto& c : b.constraints()) rows_b[c.name] = &c;
  for (const auto& ca : a.constraints()) {
    auto it = rows_b.find(ca.name);
    if (it == rows_b.end()) return fail("missing row " + ca.name);
    const auto& cb = *it->second;
    if (ca.sense != cb.sense || !close(ca.rhs, cb.rhs, rel_tol) ||
        !same_terms(named_terms(a, ca.expr), named_terms(b, cb.expr), rel_tol)) {
      return fail("row " + ca.name + " differs");
    }
  }
  return true;
}

// -------------------------------------------------------------- checking

ValidationReport check_assignment(const MilpModel& model,
                                  const std::vector<double>& values, double tol) {
  if (values.size() != model.variables().size()) {
    throw ArgumentError("assignment size does not match the model");
  }
  ValidationReport report;
  auto family = [](std::string_view name) {
    // "c5_2" -> "5"
    const auto us = name.find('_');
    return std::string(name.substr(1, us == std::string_view::npos ? name.size() - 1 : us - 1));
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = model.variables()[i];
    const double x = values[i];
    if (x < v.lower - tol || x > v.upper + tol) {
      std::ostringstream os;
      os.precision(17);
      os << v.name << " = " << x << " outside [" << v.lower << ", " << v.upper << "]";
      report.add(v.kind == VarKind::Continuous ? "7" : "integrality", os.str());
    } else if (v.kind == VarKind::Binary && x != 0.0 && x != 1.0) {
      report.add("integrality", v.name + " is not binary");
    }
  }
  for (const auto& c : model.constraints()) {
    double lhs = 0.0;
    for (const auto& t : c.expr) lhs += t.coef * values[t.var];
    const double scale = std::max(1.0, std::abs(c.rhs));
    bool ok = true;
    switch (c.sense) {
      case Sense::LessEq: ok = lhs <= c.rhs + tol * scale; break;
      case Sense::GreaterEq: ok = lhs >= c.rhs - tol * scale; break;
      case Sense::Equal: ok = std::abs(lhs - c.rhs) <= tol * scale; break;
    }
    if (!ok) {
      std::ostringstream os;
      os.precision(17);
      os << c.name << ": lhs " << lhs << " " << sense_text(c.sense) << " " << c.rhs;
      report.add(family(c.name), os.str());
    }
  }
  return report;
}

ValidationReport milp_check(const Solution& solution, const Instance& instance) {
  const MilpModel model = build_milp(instance);
  const int n = static_cast<int>(instance.n_tasks()) + 1;
  const int nv = instance.n_vehicles;
  std::vector<double> values(model.variables().size(), 0.0);
  ValidationReport pre;

  auto var = [&](const std::string& name) { return *model.find_variable(name); };
  auto point = [&](int i) { return (i == 0 || i == n) ? instance.depot : instance.node(i); };

  std::vector<bool> has_route(static_cast<std::size_t>(nv) + 1, false);
  for (const auto& route : solution.routes) {
    const int k = route.vehicle_id;
    if (k < 1 || k > nv) {
      pre.add("vehicle", "vehicle id " + std::to_string(k) + " outside 1.." +
                             std::to_string(nv));
      continue;
    }
    has_route[static_cast<std::size_t>(k)] = true;
    std::vector<int> path{0};
    for (int v : route.visits) {
      if (v < 1 || v > n - 1) {
        pre.add("index", "route " + std::to_string(k) + " visits unknown task " +
                             std::to_string(v));
        continue;
      }
      path.push_back(v);
    }
    path.push_back(n);
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    double flown = 0.0;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      const int i = path[s], j = path[s + 1];
      flown += distance(point(i), point(j));
      if (i == j) {
        pre.add("3", "route " + std::to_string(k) + " repeats task " + std::to_string(i) +
                         " consecutively");
        continue;
      }
      values[var(xname(i, j, k))] += 1.0;
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        values[var(zname(j, k))] = flown;
        if (j != n) values[var(yname(j, k))] = 1.0;
      }
    }
  }
  for (int k = 1; k <= nv; ++k) {
    if (!has_route[static_cast<std::size_t>(k)]) values[var(xname(0, n, k))] = 1.0;
  }

  ValidationReport report = check_assignment(model, values);
  for (auto& v : pre.violations) report.add(v.constraint, v.detail);
  return report;
}

}  // namespace uavsched
