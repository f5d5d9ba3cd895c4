#include "critsde/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace critsde::io {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  if (s == "nan" || s == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{})
    throw DataError("parse_double: bad numeric cell '" + std::string(s) + "'");
  return v;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw DataError("sha256: allocation failure");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw DataError("sha256: digest failure");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_text(path));
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("write_text: cannot open " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw DataError("write_text: short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_text: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Manifest::add_file(const std::filesystem::path& out_dir,
                        const std::string& rel, const std::string& role) {
  files.push_back({rel, sha256_file(out_dir / rel), role});
}

void Manifest::add_check(const std::string& name, bool pass, double value,
                         double threshold) {
  checks.push_back({name, pass, value, threshold});
}

bool Manifest::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::filesystem::path Manifest::write(
    const std::filesystem::path& out_dir) const {
  json j;
  j["experiment"] = experiment;
  j["timestamp"] = timestamp;
  j["files"] = json::array();
  for (const auto& f : files)
    j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"role", f.role}});
  j["checks"] = json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name},
                           {"pass", c.pass},
                           {"value", c.value},
                           {"threshold", c.threshold}});
  j["summary"] = summary;
  j["notes"] = notes;
  const auto path = out_dir / "manifest.json";
  write_text(path, j.dump(2) + "\n");
  return path;
}

void write_columns_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size() || columns.empty())
    throw DataError("write_columns_csv: header/column mismatch");
  const std::size_t rows = columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw DataError("write_columns_csv: ragged columns");
  std::string body;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) body.push_back(',');
    body += names[j];
  }
  body.push_back('\n');
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j) body.push_back(',');
      body += format_double(columns[j][i]);
    }
    body.push_back('\n');
  }
  write_text(path, body);
}

std::pair<std::vector<std::string>, std::vector<std::vector<double>>>
read_columns_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split_csv_line(line);
    if (!have_header) {
      names = cells;
      columns.assign(names.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != names.size())
      throw DataError("read_columns_csv: ragged row in " + path.string());
    for (std::size_t j = 0; j < cells.size(); ++j)
      columns[j].push_back(parse_double(cells[j]));
  }
  if (!have_header)
    throw DataError("read_columns_csv: empty file " + path.string());
  return {names, columns};
}

void write_field_csv(const std::filesystem::path& path,
                     const SpaceTimeField& field) {
  field.validate();
  std::string body = "# space-time field T=" + format_double(field.T) +
                     " L=" + format_double(field.grid.L) +
                     " n_x=" + std::to_string(field.grid.n_points) + "\n";
  body += "t";
  for (std::size_t i = 0; i < field.grid.n_points; ++i)
    body += "," + format_double(field.grid.x(i));
  body.push_back('\n');
  for (std::size_t ti = 0; ti < field.n_times(); ++ti) {
    body += format_double(field.times[ti]);
    const auto slice = field.slice(ti);
    for (double v : slice) body += "," + format_double(v);
    body.push_back('\n');
  }
  write_text(path, body);
}

SpaceTimeField read_field_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("# space-time field", 0) != 0)
    throw DataError("read_field_csv: missing field header in " + path.string());
  double T = 0.0;
  double L = 0.0;
  std::size_t n_x = 0;
  {
    std::istringstream hs(line.substr(std::string("# space-time field").size()));
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("T=", 0) == 0) T = parse_double(tok.substr(2));
      if (tok.rfind("L=", 0) == 0) L = parse_double(tok.substr(2));
      if (tok.rfind("n_x=", 0) == 0)
        n_x = static_cast<std::size_t>(std::stoul(tok.substr(4)));
    }
  }
  if (!std::getline(in, line))
    throw DataError("read_field_csv: truncated file " + path.string());
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n_x + 1)
      throw DataError("read_field_csv: ragged slice row in " + path.string());
    times.push_back(parse_double(cells[0]));
    for (std::size_t i = 1; i < cells.size(); ++i)
      values.push_back(parse_double(cells[i]));
  }
  SpaceTimeField field(times, T, SpatialGrid{L, n_x});
  field.values = std::move(values);
  field.validate();
  return field;
}

void write_constants_json(const std::filesystem::path& path,
                          const ExponentPair& exps, const KernelConstants& kc) {
  json j;
  j["exponents"] = {{"p", exps.p}, {"q", exps.q}, {"d", exps.dim}, {"T", exps.T}};
  j["c_sup"] = kc.c_sup;
  j["c_grad"] = kc.c_grad;
  j["c0"] = kc.c0;
  j["theta"] = kc.theta;
  write_text(path, j.dump(2) + "\n");
}

void write_density_csv(const std::filesystem::path& path,
                       const DensityEstimate& density) {
  std::string body = "# kde bandwidth=" + format_double(density.bandwidth) +
                     " n_samples=" + std::to_string(density.n_samples) + "\n";
  body += "x,density\n";
  for (std::size_t i = 0; i < density.x.size(); ++i)
    body += format_double(density.x[i]) + "," +
            format_double(density.values[i]) + "\n";
  write_text(path, body);
}

void write_map_csv(const std::filesystem::path& path, const ZvonkinMap& map) {
  std::string body = "x,phi\n";
  for (std::size_t i = 0; i < map.x_nodes.size(); ++i)
    body += format_double(map.x_nodes[i]) + "," + format_double(map.phi[i]) +
            "\n";
  write_text(path, body);
}

void write_probe_csv(const std::filesystem::path& path,
                     const FellerTable& table) {
  std::string body = "# feller probe f=" + table.test_fn +
                     " t=" + format_double(table.t) + "\n";
  body += "x,estimate,stderr\n";
  for (const auto& row : table.rows)
    body += format_double(row.x) + "," + format_double(row.estimate) + "," +
            format_double(row.se) + "\n";
  write_text(path, body);
}

std::vector<std::string> write_ensemble(const std::filesystem::path& out_dir,
                                        const std::string& stem,
                                        const PathEnsemble& ens,
                                        std::size_t shard_rows) {
  if (shard_rows == 0) throw DataError("write_ensemble: zero shard size");
  std::vector<std::string> written;

  json hdr;
  hdr["horizon"] = ens.horizon;
  hdr["x0"] = ens.x0;
  hdr["seed"] = ens.seed;
  hdr["n_paths"] = ens.n_paths();
  hdr["n_steps"] = ens.step_times.empty() ? 0 : ens.step_times.size() - 1;
  hdr["excluded"] = ens.n_excluded();
  hdr["record_times"] = ens.record_times;
  hdr["integral_names"] = ens.integral_names;
  const std::size_t n_shards = (ens.n_paths() + shard_rows - 1) / shard_rows;
  hdr["n_shards"] = n_shards;
  hdr["shard_rows"] = shard_rows;
  const std::string hdr_rel = stem + ".json";
  write_text(out_dir / hdr_rel, hdr.dump(2) + "\n");
  written.push_back(hdr_rel);

  for (std::size_t s = 0; s < n_shards; ++s) {
    const std::size_t begin = s * shard_rows;
    const std::size_t end = std::min(ens.n_paths(), begin + shard_rows);
    std::string body = "path,excluded,terminal";
    for (std::size_t r = 0; r < ens.record_times.size(); ++r)
      body += ",m" + std::to_string(r);
    for (const auto& name : ens.integral_names) body += "," + name;
    body.push_back('\n');
    for (std::size_t p = begin; p < end; ++p) {
      body += std::to_string(p);
      body += ens.excluded[p] ? ",1" : ",0";
      body += "," + format_double(ens.terminal[p]);
      for (const auto& m : ens.marginals) body += "," + format_double(m[p]);
      for (const auto& acc : ens.integrals) body += "," + format_double(acc[p]);
      body.push_back('\n');
    }
    std::array<char, 32> tag{};
    std::snprintf(tag.data(), tag.size(), "_%05zu.csv", s);
    const std::string rel = stem + tag.data();
    write_text(out_dir / rel, body);
    written.push_back(rel);
  }
  return written;
}

std::vector<std::string> emit_plots(const Manifest& manifest,
                                    const std::filesystem::path& out_dir) {
  std::vector<std::string> written;
  for (const auto& f : manifest.files) {
    const bool loglog = f.role == "loglog-table";
    const bool linear =
        f.role == "table" || f.role == "density" || f.role == "map" ||
        f.role == "probe-table";
    if (!loglog && !linear) continue;
    const auto csv = out_dir / f.path;
    if (!std::filesystem::exists(csv))
      throw DataError("emit_plots: manifest references missing CSV " + f.path);
    const auto [names, columns] = read_columns_csv(csv);
    if (names.size() < 2 || columns.front().empty()) continue;

    const std::string stem = std::filesystem::path(f.path).stem().string();
    std::string gp;
    gp += "set terminal pngcairo size 900,600\n";
    gp += "set output '" + stem + ".png'\n";
    gp += "set datafile separator ','\n";
    gp += "set key top right\n";
    gp += "set xlabel '" + names[0] + "'\n";
    if (loglog) gp += "set logscale xy\n";
    const auto slope = manifest.summary.find("fit_slope");
    if (loglog && slope != manifest.summary.end())
      gp += "set label 1 'fitted slope " + format_double(slope->second) +
            "' at graph 0.05, graph 0.9\n";
    gp += "plot";
    for (std::size_t j = 1; j < names.size(); ++j) {
      if (j > 1) gp += ",";
      gp += " '" + f.path + "' using 1:" + std::to_string(j + 1) +
            " with linespoints title '" + names[j] + "'";
    }
    gp += "\n";
    const std::string rel = stem + ".gp";
    write_text(out_dir / rel, gp);
    written.push_back(rel);
  }
  return written;
}

}  // namespace critsde::io
