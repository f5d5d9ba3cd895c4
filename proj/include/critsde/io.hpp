#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "critsde/field.hpp"
#include "critsde/heat.hpp"
#include "critsde/sde.hpp"
#include "critsde/stats.hpp"
#include "critsde/zvonkin.hpp"

namespace critsde::io {

// Shortest decimal form that parses back to the identical double, so CSV
// artifacts are byte-identical across reruns and round-trip exactly.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& body);
std::string read_text(const std::filesystem::path& path);

// Run manifest: every produced file with its content hash, plus named
// pass/fail checks.  The timestamp is the only non-reproducible field and
// lives here only, never inside the data artifacts.
struct ManifestFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::string role;
};
struct ManifestCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};
struct Manifest {
  std::string experiment;
  std::string timestamp;
  std::vector<ManifestFile> files;
  std::vector<ManifestCheck> checks;
  std::map<std::string, double> summary;
  std::vector<std::string> notes;

  // Hashes out_dir/rel as it exists on disk and appends it.
  void add_file(const std::filesystem::path& out_dir, const std::string& rel,
                const std::string& role);
  void add_check(const std::string& name, bool pass, double value,
                 double threshold);
  bool all_pass() const;
  std::filesystem::path write(const std::filesystem::path& out_dir) const;
};

// Columnar CSV with a header row; cells via format_double.
void write_columns_csv(const std::filesystem::path& path,
                       const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns);
std::pair<std::vector<std::string>, std::vector<std::vector<double>>>
read_columns_csv(const std::filesystem::path& path);

// Space-time field as one CSV: a comment header carrying (T, L), a column
// header row "t, x_0, ...", then one row per time slice.
void write_field_csv(const std::filesystem::path& path,
                     const SpaceTimeField& field);
SpaceTimeField read_field_csv(const std::filesystem::path& path);

void write_constants_json(const std::filesystem::path& path,
                          const ExponentPair& exps, const KernelConstants& kc);
void write_density_csv(const std::filesystem::path& path,
                       const DensityEstimate& density);
void write_map_csv(const std::filesystem::path& path, const ZvonkinMap& map);
void write_probe_csv(const std::filesystem::path& path,
                     const FellerTable& table);

// Ensemble persistence: a JSON header plus per-path CSV shards
// (path index, terminal, recorded marginals, integral accumulators).
// Returns the relative paths written, header first.
std::vector<std::string> write_ensemble(const std::filesystem::path& out_dir,
                                        const std::string& stem,
                                        const PathEnsemble& ens,
                                        std::size_t shard_rows = 65536);

// Plot-script emission: one self-contained gnuplot script per tabular
// artifact, referencing the CSV by relative path (data is never embedded).
// Roles drive the style: "loglog-table" gets log axes; "table", "density",
// "map", and "probe-table" get linear axes; other roles are skipped.
// A "fit_slope" summary entry becomes a label on log-log plots.
std::vector<std::string> emit_plots(const Manifest& manifest,
                                    const std::filesystem::path& out_dir);

}  // namespace critsde::io
