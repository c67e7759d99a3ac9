#include "uavsched/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "uavsched/error.hpp"
#include "uavsched/rng.hpp"

namespace uavsched {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Lines with comments removed; keeps 1-based line numbers for messages.
std::vector<std::pair<int, std::vector<std::string_view>>> tokenize(
    std::string_view text) {
  std::vector<std::pair<int, std::vector<std::string_view>>> lines;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto toks = split_ws(line);
    if (!toks.empty()) lines.emplace_back(lineno, std::move(toks));
    pos = end + 1;
  }
  return lines;
}

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw FormatError("line " + std::to_string(lineno) + ": " + what);
}

double to_real(std::string_view tok, int lineno) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(lineno, "expected a real number, got '" + std::string(tok) + "'");
  }
  return value;
}

long to_int(std::string_view tok, int lineno) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(lineno, "expected an integer, got '" + std::string(tok) + "'");
  }
  return value;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_instance(const Instance& instance,
                            std::optional<std::uint64_t> seed) {
  std::ostringstream os;
  os << "uavsched v1\n";
  if (seed) os << "# rng " << Rng::kAlgorithm << " seed " << *seed << "\n";
  os << "vehicles " << instance.n_vehicles << "\n";
  os << "budget " << format_real(instance.budget) << "\n";
  os << "depot " << format_real(instance.depot.x) << " "
     << format_real(instance.depot.y) << "\n";
  for (const auto& t : instance.tasks) {
    os << "task " << format_real(t.x) << " " << format_real(t.y) << "\n";
  }
  return os.str();
}

Instance parse_instance(std::string_view text) {
  const auto lines = tokenize(text);
  if (lines.empty() || lines[0].second.size() != 2 ||
      lines[0].second[0] != "uavsched" || lines[0].second[1] != "v1") {
    throw FormatError("missing 'uavsched v1' header");
  }
  Instance inst;
  bool have_vehicles = false, have_budget = false, have_depot = false;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [lineno, toks] = lines[k];
    const auto key = toks[0];
    auto expect = [&](std::size_t n) {
      if (toks.size() != n) {
        fail(lineno, "'" + std::string(key) + "' expects " +
                         std::to_string(n - 1) + " value(s)");
      }
    };
    if (key == "vehicles") {
      expect(2);
      inst.n_vehicles = static_cast<int>(to_int(toks[1], lineno));
      have_vehicles = true;
    } else if (key == "budget") {
      expect(2);
      inst.budget = to_real(toks[1], lineno);
      have_budget = true;
    } else if (key == "depot") {
      expect(3);
      inst.depot = {to_real(toks[1], lineno), to_real(toks[2], lineno)};
      have_depot = true;
    } else if (key == "task") {
      expect(3);
      inst.tasks.push_back({to_real(toks[1], lineno), to_real(toks[2], lineno)});
    } else {
      fail(lineno, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_vehicles || !have_budget || !have_depot) {
    throw FormatError("instance needs 'vehicles', 'budget' and 'depot' lines");
  }
  try {
    check_instance(inst);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid instance: ") + e.what());
  }
  return inst;
}

std::string format_solution(const Solution& solution) {
  std::ostringstream os;
  for (const auto& r : solution.routes) {
    os << "route " << r.vehicle_id << ":";
    for (int v : r.visits) os << " " << v;
    os << "\n";
  }
  return os.str();
}

Solution parse_solution(std::string_view text) {
  Solution sol;
  for (const auto& [lineno, toks] : tokenize(text)) {
    if (toks[0] != "route" || toks.size() < 2 || toks[1].empty() ||
        toks[1].back() != ':') {
      fail(lineno, "expected 'route k: i1 i2 ...'");
    }
    Route r;
    r.vehicle_id = static_cast<int>(
        to_int(toks[1].substr(0, toks[1].size() - 1), lineno));
    for (std::size_t i = 2; i < toks.size(); ++i) {
      r.visits.push_back(static_cast<int>(to_int(toks[i], lineno)));
    }
    sol.routes.push_back(std::move(r));
  }
  return sol;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

Instance load_instance(const std::filesystem::path& path) {
  return parse_instance(read_file(path));
}

Solution load_solution(const std::filesystem::path& path) {
  return parse_solution(read_file(path));
}

}  // namespace uavsched
