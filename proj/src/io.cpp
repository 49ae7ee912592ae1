#include "lgcpd/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgcpd/error.hpp"

namespace lgcpd {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return out;
}

double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorCode::Io, "malformed number '" + std::string(s) + "' in " + where);
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

Domain load_mask_file(const std::string& path) {
  auto in = open_in(path);
  Resolution res{};
  Bounds b;
  if (!(in >> res[0] >> res[1] >> res[2] >> b.lo[0] >> b.hi[0] >> b.lo[1] >> b.hi[1] >> b.lo[2] >> b.hi[2]))
    fail(ErrorCode::Io, "malformed mask header in '" + path + "'");
  const std::size_t count = res[0] * res[1] * res[2];
  std::vector<bool> cells;
  cells.reserve(count);
  int v = 0;
  while (cells.size() < count && in >> v) {
    if (v != 0 && v != 1) fail(ErrorCode::Io, "mask values must be 0 or 1 in '" + path + "'");
    cells.push_back(v == 1);
  }
  if (cells.size() != count) fail(ErrorCode::Io, "mask '" + path + "' has fewer cells than its header declares");
  std::string extra;
  if (in >> extra) fail(ErrorCode::Io, "mask '" + path + "' has trailing data");
  try {
    return Domain(b, RasterMask(res, std::move(cells)));
  } catch (const Error& e) {
    fail(ErrorCode::Io, "invalid mask '" + path + "': " + e.what());
  }
}

void save_mask_file(const std::string& path, const Domain& domain) {
  require(domain.mask().has_value(), "domain has no mask to save");
  auto out = open_out(path);
  const auto& m = *domain.mask();
  const auto& b = domain.bounds();
  out << m.resolution()[0] << ' ' << m.resolution()[1] << ' ' << m.resolution()[2];
  for (int a = 0; a < 3; ++a) out << ' ' << format_double(b.lo[a]) << ' ' << format_double(b.hi[a]);
  out << '\n';
  const auto& cells = m.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) out << (cells[i] ? '1' : '0') << ((i + 1) % m.resolution()[0] == 0 ? '\n' : ' ');
}

std::string provenance_path(const std::string& design_csv) { return design_csv + ".prov.json"; }

void save_design(const std::string& path, const Design& design) {
  {
    auto out = open_out(path);
    out << "s1,s2,t\n";
    for (const auto& p : design.points)
      out << format_double(p.s1) << ',' << format_double(p.s2) << ',' << format_double(p.t) << '\n';
    if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
  }
  nlohmann::ordered_json j;
  const auto& prov = design.provenance;
  j["generator"] = prov.generator;
  j["seed"] = prov.seed;
  j["n"] = design.size();
  for (const auto& [k, v] : prov.params) j[k] = v;
  j["proposals"] = prov.proposals;
  j["restarts"] = prov.restarts;
  j["accepted"] = prov.accepted;
  auto out = open_out(provenance_path(path));
  out << j.dump(2) << '\n';
}

Design load_design(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Io, "design file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "s1,s2,t") fail(ErrorCode::Io, "design file '" + path + "' must start with header s1,s2,t");
  Design d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
      fail(ErrorCode::Io, "expected three columns at " + where);
    const std::string_view sv(line);
    d.points.push_back({parse_double(sv.substr(0, c1), where), parse_double(sv.substr(c1 + 1, c2 - c1 - 1), where),
                        parse_double(sv.substr(c2 + 1), where)});
  }
  const auto prov = provenance_path(path);
  if (std::filesystem::exists(prov)) {
    auto pin = open_in(prov);
    nlohmann::json j;
    try {
      pin >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Io, "malformed provenance '" + prov + "': " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& key = it.key();
      if (key == "generator") d.provenance.generator = it->get<std::string>();
      else if (key == "seed") d.provenance.seed = it->get<std::uint64_t>();
      else if (key == "proposals") d.provenance.proposals = it->get<std::size_t>();
      else if (key == "restarts") d.provenance.restarts = it->get<std::size_t>();
      else if (key == "accepted") d.provenance.accepted = it->get<std::vector<std::size_t>>();
      else if (key != "n" && it->is_string()) d.provenance.params[key] = it->get<std::string>();
    }
  }
  return d;
}

void write_comparison_csv(std::ostream& os, const Comparison& comparison) {
  os << "design_name,criterion,estimate,std_error,M,reduction_vs_base_pct\n";
  for (const auto& r : comparison.rows) {
    os << r.design_name << ',' << to_string(r.estimate.criterion) << ',' << format_double(r.estimate.value) << ','
       << format_double(r.estimate.std_error) << ',' << r.estimate.replicate_count << ',';
    if (r.reduction_vs_base_pct) os << format_double(*r.reduction_vs_base_pct);
    os << '\n';
  }
}

}  // namespace lgcpd
