#include "anchorloc/run_config.h"

#include <charconv>
#include <functional>
#include <limits>
#include <set>

#include "anchorloc/error.h"
#include "anchorloc/io.h"

namespace anchorloc {
namespace {

struct Entry {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, const std::string&, int)> set;
};

// Field accessors take a mutable config; getters read through a copy.
template <typename T>
T Read(const std::function<T&(RunConfig&)>& field, const RunConfig& c) {
  RunConfig copy = c;
  return field(copy);
}

std::string ShortestDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Entry Real(std::string name, std::string help, std::function<double&(RunConfig&)> field,
           bool positive = false) {
  Entry e;
  e.name = std::move(name);
  e.help = std::move(help);
  e.get = [field](const RunConfig& c) { return ShortestDouble(Read(field, c)); };
  e.set = [field, positive, key = e.name](RunConfig& c, std::string_view v, const std::string& file,
                                          int line) {
    const double value = ParseDouble(v, file, line);
    if (positive ? !(value > 0.0) : value < 0.0) {
      ThrowParseError(file, line, key + " must be " + (positive ? "positive" : "non-negative"));
    }
    field(c) = value;
  };
  return e;
}

Entry Integer(std::string name, std::string help, std::function<int&(RunConfig&)> field,
              int min_value) {
  Entry e;
  e.name = std::move(name);
  e.help = std::move(help);
  e.get = [field](const RunConfig& c) { return std::to_string(Read(field, c)); };
  e.set = [field, min_value, key = e.name](RunConfig& c, std::string_view v,
                                           const std::string& file, int line) {
    const long long value = ParseInteger(v, file, line);
    if (value < min_value || value > std::numeric_limits<int>::max()) {
      ThrowParseError(file, line, key + " must be an integer >= " + std::to_string(min_value));
    }
    field(c) = static_cast<int>(value);
  };
  return e;
}

Entry Boolean(std::string name, std::string help, std::function<bool&(RunConfig&)> field) {
  Entry e;
  e.name = std::move(name);
  e.help = std::move(help);
  e.get = [field](const RunConfig& c) {
    return std::string(Read(field, c) ? "true" : "false");
  };
  e.set = [field](RunConfig& c, std::string_view v, const std::string& file, int line) {
    field(c) = ParseBool(v, file, line);
  };
  return e;
}

Entry Text(std::string name, std::string help, std::function<std::string&(RunConfig&)> field) {
  Entry e;
  e.name = std::move(name);
  e.help = std::move(help);
  e.get = [field](const RunConfig& c) {
    const std::string v = Read(field, c);
    return v.empty() ? std::string("\"\"") : v;
  };
  e.set = [field](RunConfig& c, std::string_view v, const std::string&, int) {
    field(c) = v == "\"\"" ? std::string() : std::string(v);
  };
  return e;
}

const std::vector<Entry>& Entries() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> out;
    {
      Entry e;
      e.name = "mode";
      e.help = "independent | colocalize | rig";
      e.get = [](const RunConfig& c) { return std::string(ModeName(c.localizer.mode)); };
      e.set = [](RunConfig& c, std::string_view v, const std::string& file, int line) {
        try {
          c.localizer.mode = ParseMode(v);
        } catch (const Error& err) {
          ThrowParseError(file, line, err.what());
        }
      };
      out.push_back(e);
    }
    {
      Entry e;
      e.name = "variant";
      e.help = "full | no_postopt | sampson | local_opt | lud";
      e.get = [](const RunConfig& c) { return std::string(VariantName(c.localizer.variant)); };
      e.set = [](RunConfig& c, std::string_view v, const std::string& file, int line) {
        try {
          c.localizer.variant = ParseVariant(v);
        } catch (const Error& err) {
          ThrowParseError(file, line, err.what());
        }
      };
      out.push_back(e);
    }
    {
      Entry e;
      e.name = "seed";
      e.help = "seed of all random sampling";
      e.get = [](const RunConfig& c) { return std::to_string(c.seed); };
      e.set = [](RunConfig& c, std::string_view v, const std::string& file, int line) {
        uint64_t value = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
        if (ec != std::errc() || ptr != v.data() + v.size()) {
          ThrowParseError(file, line, "invalid seed '" + std::string(v) + "'");
        }
        c.seed = value;
      };
      out.push_back(e);
    }
    out.push_back(Integer("top_k", "retrieval pairs used per query, in listed order (0: all)",
                          [](RunConfig& c) -> int& { return c.localizer.top_k; }, 0));
    out.push_back(Integer("threads", "worker threads (0: hardware concurrency)",
                          [](RunConfig& c) -> int& { return c.threads; }, 0));

    out.push_back(Real("two_view.threshold_px", "Sampson inlier threshold, pixels",
                       [](RunConfig& c) -> double& { return c.localizer.ransac_threshold_px; },
                       true));
    out.push_back(Integer("two_view.max_iterations", "RANSAC iteration cap",
                          [](RunConfig& c) -> int& { return c.localizer.ransac.max_iterations; },
                          1));
    out.push_back(Integer("two_view.min_iterations", "RANSAC minimum iterations",
                          [](RunConfig& c) -> int& { return c.localizer.ransac.min_iterations; },
                          0));
    out.push_back(Real("two_view.confidence", "RANSAC confidence for adaptive stopping",
                       [](RunConfig& c) -> double& { return c.localizer.ransac.confidence; },
                       true));
    out.push_back(Integer("two_view.min_inliers", "inliers required for a valid edge",
                          [](RunConfig& c) -> int& { return c.localizer.ransac.min_inliers; }, 5));
    out.push_back(Boolean("two_view.refine", "Sampson refinement of the RANSAC model",
                          [](RunConfig& c) -> bool& { return c.localizer.ransac.refine; }));

    out.push_back(Integer("rotation.l1_iterations", "L1 outer iterations",
                          [](RunConfig& c) -> int& { return c.localizer.rotation.l1_iterations; },
                          0));
    out.push_back(Integer("rotation.irls_iterations", "IRLS iterations",
                          [](RunConfig& c) -> int& { return c.localizer.rotation.irls_iterations; },
                          0));
    out.push_back(Real("rotation.irls_sigma", "Cauchy weight scale, radians",
                       [](RunConfig& c) -> double& { return c.localizer.rotation.irls_sigma; },
                       true));
    out.push_back(Real("rotation.irls_cutoff", "residual angle with zero IRLS weight, radians",
                       [](RunConfig& c) -> double& { return c.localizer.rotation.irls_cutoff; },
                       true));
    out.push_back(Integer("rotation.inlier_weight_cap", "inlier count where edge weight saturates",
                          [](RunConfig& c) -> int& {
                            return c.localizer.rotation.inlier_weight_cap;
                          },
                          1));
    out.push_back(Real("rotation.tolerance", "update norm for early stop, radians",
                       [](RunConfig& c) -> double& { return c.localizer.rotation.tolerance; }));

    out.push_back(Real("translation.gate_deg", "rotation-consistency gate, degrees",
                       [](RunConfig& c) -> double& { return c.localizer.gate_deg; }, true));
    out.push_back(Real("translation.huber_delta_deg", "Huber threshold as an angle (0: none)",
                       [](RunConfig& c) -> double& {
                         return c.localizer.translation.huber_delta_deg;
                       }));
    out.push_back(Real("translation.outlier_angle_deg", "direction outlier angle (0: off)",
                       [](RunConfig& c) -> double& {
                         return c.localizer.translation.outlier_angle_deg;
                       }));
    out.push_back(Integer("translation.max_iterations", "solver iterations",
                          [](RunConfig& c) -> int& {
                            return c.localizer.translation.max_iterations;
                          },
                          1));
    out.push_back(Real("translation.tolerance", "relative cost decrease for convergence",
                       [](RunConfig& c) -> double& { return c.localizer.translation.tolerance; }));

    out.push_back(Real("postopt.huber_px", "Huber threshold on reprojection error, pixels",
                       [](RunConfig& c) -> double& { return c.localizer.postopt.huber_px; },
                       true));
    out.push_back(Integer("postopt.max_iterations", "joint refinement iterations",
                          [](RunConfig& c) -> int& { return c.localizer.postopt.max_iterations; },
                          1));
    out.push_back(Real("postopt.weak_track_weight", "weight of tracks without database anchor",
                       [](RunConfig& c) -> double& {
                         return c.localizer.postopt.weak_track_weight;
                       }));
    out.push_back(Integer("postopt.max_recheck_rounds", "re-check rounds after refinement",
                          [](RunConfig& c) -> int& {
                            return c.localizer.postopt.max_recheck_rounds;
                          },
                          0));
    out.push_back(Real("postopt.min_tri_angle_deg", "minimum triangulation angle, degrees",
                       [](RunConfig& c) -> double& {
                         return c.localizer.postopt.checks.min_tri_angle_deg;
                       }));
    out.push_back(Real("postopt.max_reproj_px", "track reprojection limit, pixels",
                       [](RunConfig& c) -> double& {
                         return c.localizer.postopt.checks.max_reproj_px;
                       },
                       true));

    out.push_back(Text("output.report", "report path (.csv selects CSV)",
                       [](RunConfig& c) -> std::string& { return c.report_path; }));
    out.push_back(Text("output.edges", "per-edge table path (\"\": not written)",
                       [](RunConfig& c) -> std::string& { return c.edges_path; }));
    return out;
  }();
  return entries;
}

const Entry* FindEntry(std::string_view key) {
  for (const Entry& e : Entries()) {
    if (e.name == key) return &e;
  }
  return nullptr;
}

}  // namespace

std::vector<ConfigKey> ConfigKeys() {
  const RunConfig defaults;
  std::vector<ConfigKey> out;
  for (const Entry& e : Entries()) out.push_back({e.name, e.help, e.get(defaults)});
  return out;
}

void SetConfigValue(RunConfig& config, std::string_view key, std::string_view value,
                    const std::string& file, int line) {
  const Entry* entry = FindEntry(key);
  if (!entry) ThrowParseError(file, line, "unknown key '" + std::string(key) + "'");
  entry->set(config, value, file, line);
}

std::string GetConfigValue(const RunConfig& config, std::string_view key) {
  const Entry* entry = FindEntry(key);
  if (!entry) throw Error(ErrorCode::kInvalidArgument, "unknown key '" + std::string(key) + "'");
  return entry->get(config);
}

RunConfig ParseRunConfig(std::string_view content, const std::string& file) {
  RunConfig config;
  std::set<std::string> seen;
  for (const TextLine& line : TokenizeText(content)) {
    std::vector<std::string> tokens = line.tokens;
    if (tokens.size() == 3 && tokens[1] == "=") tokens.erase(tokens.begin() + 1);
    if (tokens.size() != 2) ThrowParseError(file, line.number, "expected 'key value'");
    if (!seen.insert(tokens[0]).second) {
      ThrowParseError(file, line.number, "repeated key '" + tokens[0] + "'");
    }
    SetConfigValue(config, tokens[0], tokens[1], file, line.number);
  }
  return config;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  return ParseRunConfig(ReadFileContent(path), path.string());
}

std::string FormatRunConfig(const RunConfig& config) {
  std::string out;
  for (const Entry& e : Entries()) out += e.name + " " + e.get(config) + "\n";
  return out;
}

std::string ConfigHelp() {
  size_t width = 0;
  for (const Entry& e : Entries()) width = std::max(width, e.name.size());
  const RunConfig defaults;
  std::string out;
  for (const Entry& e : Entries()) {
    std::string name = e.name;
    name.resize(width, ' ');
    out += "  " + name + "  " + e.help + " (default: " + e.get(defaults) + ")\n";
  }
  return out;
}

}  // namespace anchorloc
