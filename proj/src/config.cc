#include "sdmvs/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <type_traits>
#include <vector>

#include "sdmvs/error.h"

namespace sdmvs {

namespace {

std::string_view Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool ParseNumber(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

bool ParseNumber(std::string_view s, int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool ParseNumber(std::string_view s, std::uint64_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool ParseBool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "off") {
    out = false;
    return true;
  }
  return false;
}

struct Key {
  std::string_view name;
  std::function<bool(std::string_view, Settings&)> set;
  std::function<std::string(const Settings&)> get;
};

template <typename Owner, typename T>
Key Field(std::string_view name, std::function<Owner&(Settings&)> owner,
          T Owner::*member) {
  return Key{name,
             [owner, member](std::string_view v, Settings& s) {
               if constexpr (std::is_same_v<T, bool>) {
                 return ParseBool(v, owner(s).*member);
               } else {
                 return ParseNumber(v, owner(s).*member);
               }
             },
             [owner, member](const Settings& s) {
               std::ostringstream os;
               const Owner& o = owner(const_cast<Settings&>(s));
               if constexpr (std::is_same_v<T, bool>) {
                 os << (o.*member ? "true" : "false");
               } else {
                 os << std::setprecision(17) << o.*member;
               }
               return os.str();
             }};
}

const std::vector<Key>& Keys() {
  using C = CostParams;
  using W = Weights;
  using P = PropagationParams;
  using R = RefineParams;
  using F = FusionParams;
  using Pl = PipelineConfig;
  static const std::function<C&(Settings&)> cost = [](Settings& s) -> C& {
    return s.pipeline.cost;
  };
  static const std::function<W&(Settings&)> weights = [](Settings& s) -> W& {
    return s.pipeline.initial_weights;
  };
  static const std::function<P&(Settings&)> prop = [](Settings& s) -> P& {
    return s.pipeline.propagation;
  };
  static const std::function<R&(Settings&)> refine = [](Settings& s) -> R& {
    return s.pipeline.refine;
  };
  static const std::function<F&(Settings&)> fusion = [](Settings& s) -> F& {
    return s.fusion;
  };
  static const std::function<Pl&(Settings&)> pipe = [](Settings& s) -> Pl& {
    return s.pipeline;
  };
  static const std::vector<Key> keys = {
      Field("patch_side", pipe, &Pl::patch_side),
      Field("downsample_count", pipe, &Pl::downsample_count),
      Field("cap_distance", pipe, &Pl::cap_distance),
      Field("outer_iterations", pipe, &Pl::outer_iterations),
      Field("sweeps_per_iteration", pipe, &Pl::sweeps_per_iteration),
      Field("seed", pipe, &Pl::seed),
      Field("threads", pipe, &Pl::threads),
      Field("w_ms", weights, &W::ms),
      Field("w_rp", weights, &W::rp),
      Field("w_pc", weights, &W::pc),
      Field("tau", cost, &C::tau_pc),
      Field("tau_rp", cost, &C::tau_rp),
      Key{"pc_mode",
          [](std::string_view v, Settings& s) {
            if (v == "literal") {
              s.pipeline.cost.pc_mode = ColorErrorMode::kLiteral;
            } else if (v == "capped") {
              s.pipeline.cost.pc_mode = ColorErrorMode::kCapped;
            } else {
              return false;
            }
            return true;
          },
          [](const Settings& s) -> std::string {
            return s.pipeline.cost.pc_mode == ColorErrorMode::kLiteral ? "literal"
                                                                       : "capped";
          }},
      Field("sigma_color", cost, &C::sigma_color),
      Field("sigma_spatial", cost, &C::sigma_spatial),
      Field("min_samples", cost, &C::min_samples),
      Field("ncc_min_variance", cost, &C::min_variance),
      Field("max_invalid_fraction", cost, &C::max_invalid_fraction),
      Field("top_k_sources", cost, &C::top_k),
      Field("multi_scale_cost", cost, &C::multi_scale),
      Field("square_patch", cost, &C::square_patch),
      Field("adaptive_propagation", prop, &P::adaptive),
      Field("multi_scale_propagation", prop, &P::multi_scale),
      Field("refinement", pipe, &Pl::refinement),
      Field("n_max", refine, &R::rounds),
      Key{"refine_mode",
          [](std::string_view v, Settings& s) {
            if (v == "spherical") {
              s.pipeline.refine.mode = RefineMode::kSpherical;
            } else if (v == "eq9" || v == "axis") {
              s.pipeline.refine.mode = RefineMode::kAxisPerturbation;
            } else {
              return false;
            }
            return true;
          },
          [](const Settings& s) -> std::string {
            return s.pipeline.refine.mode == RefineMode::kSpherical ? "spherical"
                                                                    : "eq9";
          }},
      Field("full_rodrigues", refine, &R::full_rodrigues),
      Field("raw_descent", refine, &R::raw_descent),
      Field("axis_normal_step", refine, &R::axis_normal_step),
      Field("axis_depth_fraction", refine, &R::axis_depth_fraction),
      Field("em", pipe, &Pl::em),
      Field("eta", pipe, &Pl::eta),
      Field("min_anchors", pipe, &Pl::min_anchors),
      Field("anchor_epipolar_px", pipe, &Pl::anchor_epipolar_px),
      Key{"m_step",
          [](std::string_view v, Settings& s) {
            if (v == "barrier") {
              s.pipeline.exact_m_step = false;
            } else if (v == "vertex") {
              s.pipeline.exact_m_step = true;
            } else {
              return false;
            }
            return true;
          },
          [](const Settings& s) -> std::string {
            return s.pipeline.exact_m_step ? "vertex" : "barrier";
          }},
      Key{"weights_scope",
          [](std::string_view v, Settings& s) {
            if (v == "per-view") {
              s.pipeline.per_view_weights = true;
            } else if (v == "global") {
              s.pipeline.per_view_weights = false;
            } else {
              return false;
            }
            return true;
          },
          [](const Settings& s) -> std::string {
            return s.pipeline.per_view_weights ? "per-view" : "global";
          }},
      Field("consistency_min", fusion, &F::consistency_min),
      Field("fuse_rel_depth_tol", fusion, &F::rel_depth_tol),
      Field("fuse_normal_angle_deg", fusion, &F::normal_angle_tol_deg),
  };
  return keys;
}

}  // namespace

void ApplyConfigText(std::string_view text, std::string_view source,
                     Settings& settings) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fail = [&](const std::string& why) {
      std::ostringstream os;
      os << source << ":" << line_no << ": " << why;
      throw Error(ErrorCode::kParseError, os.str());
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const auto& keys = Keys();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const Key& k) { return k.name == key; });
    if (key == "ablation") {
      const auto a = ParseAblation(value);
      if (!a) fail("unknown ablation '" + std::string(value) + "'");
      ApplyAblation(*a, settings.pipeline);
    } else if (it == keys.end()) {
      fail("unknown key '" + std::string(key) + "'");
    } else if (!it->set(value, settings)) {
      fail("bad value '" + std::string(value) + "' for " + std::string(key));
    }
    if (end == text.size()) break;
  }
}

void ApplyConfigFile(const std::string& path, Settings& settings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  ApplyConfigText(text.str(), path, settings);
}

std::string SerializeConfig(const Settings& settings) {
  std::ostringstream os;
  for (const Key& k : Keys()) os << k.name << " = " << k.get(settings) << "\n";
  return os.str();
}

}  // namespace sdmvs
