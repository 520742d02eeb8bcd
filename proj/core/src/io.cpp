#include "zlpf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace zlpf {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << text;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError(std::string(what) + ": expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + ": expected a matrix");
  const std::size_t rows = j.size();
  Eigen::MatrixXd m;
  for (std::size_t i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = vector_from(j[i], what);
    if (i == 0) m.resize(rows, row.size());
    if (row.size() != m.cols()) throw InputError(std::string(what) + ": ragged matrix");
    m.row(static_cast<int>(i)) = row.transpose();
  }
  return m;
}

json vector_to(const Eigen::VectorXd& v) {
  json j = json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (int i = 0; i < m.rows(); ++i) j.push_back(vector_to(m.row(i).transpose()));
  return j;
}

LayerSpec layer_from_json(const json& j, int dim) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("layer: missing \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zoom") {
    if (!j.contains("kappa")) throw InputError("zoom layer: missing \"kappa\"");
    return ZoomLayer(ZoomParams(j.at("kappa").get<double>(), dim));
  }
  if (kind == "rotation") {
    if (j.contains("matrix")) return RotationLayer(Rotation(matrix_from(j.at("matrix"), "rotation")));
    if (j.contains("target"))
      return RotationLayer(rotation_to(SpherePoint(vector_from(j.at("target"), "rotation target"))));
    throw InputError("rotation layer: need \"matrix\" or \"target\"");
  }
  if (kind == "linear_project") {
    const std::string variant = j.value("variant", "full");
    if (variant == "full")
      return LinearProjectLayer(LPParams::full(matrix_from(j.at("matrix"), "linear_project")));
    if (variant == "diagonal")
      return LinearProjectLayer(LPParams::diagonal(vector_from(j.at("scales"), "linear_project")));
    if (variant == "constrained") {
      if (!j.contains("kappa"))
        throw InputError("constrained linear_project layer: missing \"kappa\"");
      return LinearProjectLayer(LPParams::constrained(vector_from(j.at("scales"), "linear_project"),
                                                      j.at("kappa").get<double>()));
    }
    throw InputError("linear_project layer: unknown variant " + variant);
  }
  throw InputError("layer: unknown kind " + kind);
}

json layer_to_json(const LayerSpec& layer) {
  json j;
  if (const auto* zoom = std::get_if<ZoomLayer>(&layer)) {
    j["kind"] = "zoom";
    j["kappa"] = zoom->params.kappa;
  } else if (const auto* lp = std::get_if<LinearProjectLayer>(&layer)) {
    j["kind"] = "linear_project";
    switch (lp->params.variant()) {
      case LPVariant::Full:
        j["variant"] = "full";
        j["matrix"] = matrix_to(lp->params.matrix());
        break;
      case LPVariant::DiagonalS:
        j["variant"] = "diagonal";
        j["scales"] = vector_to(lp->params.matrix().diagonal());
        break;
      case LPVariant::ConstrainedSc: {
        j["variant"] = "constrained";
        const Eigen::VectorXd diag = lp->params.matrix().diagonal();
        j["scales"] = vector_to(diag.head(diag.size() - 1));
        j["kappa"] = lp->params.kappa();
        break;
      }
    }
  } else {
    j["kind"] = "rotation";
    j["matrix"] = matrix_to(std::get<RotationLayer>(layer).rot.matrix());
  }
  return j;
}

FamilyPreset preset_from_json(const json& j, int dim) {
  if (!j.is_object() || !j.contains("family")) throw InputError("preset: missing \"family\"");
  const std::string family = j.at("family").get<std::string>();

  const auto mu_of = [&](const json& p) {
    if (!p.contains("mu")) throw InputError(family + " preset: missing \"mu\"");
    Eigen::VectorXd mu = vector_from(p.at("mu"), "mu");
    if (mu.size() != dim) throw InputError(family + " preset: \"mu\" has the wrong dimension");
    return mu;
  };
  const auto kappa_of = [&](const json& p) {
    if (!p.contains("kappa")) throw InputError(family + " preset: missing \"kappa\"");
    return p.at("kappa").get<double>();
  };
  const auto sigmas_c_of = [&](const json& p) -> Eigen::VectorXd {
    if (p.contains("u")) {
      if (dim != 3) throw InputError(family + " preset: \"u\" is only defined for D = 3");
      const double u = p.at("u").get<double>();
      Eigen::VectorXd s(2);
      s << u, 1.0 / u;
      return s;
    }
    if (!p.contains("scales")) throw InputError(family + " preset: need \"u\" or \"scales\"");
    return vector_from(p.at("scales"), "scales");
  };

  if (family == "vmf") return VmfPreset{mu_of(j), kappa_of(j)};
  if (family == "bingham") return BinghamPreset{matrix_from(j.at("matrix"), "bingham matrix")};
  if (family == "fb4") {
    Eigen::VectorXd sigmas;
    bool shared = true;
    const json& s = j.at("sigma");
    if (s.is_number()) {
      sigmas = Eigen::VectorXd::Constant(dim - 1, s.get<double>());
    } else {
      sigmas = vector_from(s, "fb4 sigma");
      shared = false;
    }
    return Fb4Preset{mu_of(j), kappa_of(j), std::move(sigmas), shared};
  }
  if (family == "kent") {
    KentPreset p{mu_of(j), kappa_of(j), sigmas_c_of(j)};
    return p;
  }
  if (family == "fb6")
    return Fb6Preset{mu_of(j), kappa_of(j), sigmas_c_of(j),
                     vector_from(j.at("inner_scales"), "fb6 inner_scales")};
  if (family == "fb8")
    return Fb8Preset{mu_of(j), kappa_of(j), sigmas_c_of(j),
                     matrix_from(j.at("inner_matrix"), "fb8 inner_matrix")};
  if (family == "generic") {
    if (!j.contains("blocks")) throw InputError("generic preset: missing \"blocks\"");
    GenericPreset p;
    for (const auto& b : j.at("blocks")) {
      GenericBlock block;
      block.rotation = b.contains("rotation") ? matrix_from(b.at("rotation"), "generic rotation")
                                              : Eigen::MatrixXd::Identity(dim, dim);
      block.kappa = b.at("kappa").get<double>();
      block.a = b.contains("matrix") ? matrix_from(b.at("matrix"), "generic matrix")
                                     : Eigen::MatrixXd::Identity(dim, dim);
      p.blocks.push_back(std::move(block));
    }
    return p;
  }
  throw InputError("preset: unknown family " + family);
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("malformed JSON");
  return j;
}

}  // namespace

FlowChain chain_from_json(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw InputError("chain spec: expected an object");
  if (!j.contains("dimension")) throw InputError("chain spec: missing \"dimension\"");
  const int dim = j.at("dimension").get<int>();
  if (dim < 2) throw InputError("chain spec: dimension must be at least 2");

  const bool has_layers = j.contains("layers");
  const bool has_preset = j.contains("preset");
  if (has_layers && has_preset)
    throw InputError("chain spec: \"layers\" and \"preset\" are mutually exclusive");

  if (has_preset) {
    FlowChain chain = build_preset(preset_from_json(j.at("preset"), dim));
    if (chain.dim() != dim) throw InputError("chain spec: preset dimension mismatch");
    return chain;
  }

  std::vector<LayerSpec> layers;
  if (has_layers) {
    for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj, dim));
    const std::string order = j.value("applies_first", "first");
    if (order == "first") {
      // File lists layers in application order; composition order is the
      // reverse of that.
      std::reverse(layers.begin(), layers.end());
    } else if (order != "last") {
      throw InputError("chain spec: \"applies_first\" must be \"first\" or \"last\"");
    }
  }
  return FlowChain(dim, std::move(layers));
}

std::string chain_to_json(const FlowChain& chain) {
  json j;
  j["dimension"] = chain.dim();
  j["applies_first"] = "first";
  json layers = json::array();
  for (auto it = chain.layers().rbegin(); it != chain.layers().rend(); ++it)
    layers.push_back(layer_to_json(*it));
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

FlowChain load_chain_spec(const std::string& path) { return chain_from_json(read_file(path)); }

void save_chain_spec(const std::string& path, const FlowChain& chain) {
  write_file(path, chain_to_json(chain));
}

std::optional<std::string> spec_preset_family(const std::string& path) {
  const json j = parse_json(read_file(path));
  if (j.is_object() && j.contains("preset") && j.at("preset").contains("family"))
    return j.at("preset").at("family").get<std::string>();
  return std::nullopt;
}

namespace {
void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}
}  // namespace

SampleSet load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("sample file: empty");
  strip_cr(line);

  // Header: x1,...,xD[,logp]
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  bool has_logp = !cols.empty() && cols.back() == "logp";
  const int dim = static_cast<int>(cols.size()) - (has_logp ? 1 : 0);
  if (dim < 2) throw InputError("sample file: header must be x1,...,xD[,logp]");
  for (int i = 0; i < dim; ++i)
    if (cols[i] != "x" + std::to_string(i + 1))
      throw InputError("sample file: unexpected header column " + cols[i]);

  SampleSet out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!std::getline(ss, tok, ','))
        throw InputError("sample file: short row at line " + std::to_string(lineno));
      try {
        v[i] = std::stod(tok);
      } catch (const std::exception&) {
        throw InputError("sample file: bad number at line " + std::to_string(lineno));
      }
    }
    double logp = 0.0;
    if (has_logp) {
      if (!std::getline(ss, tok, ','))
        throw InputError("sample file: short row at line " + std::to_string(lineno));
      logp = std::stod(tok);
    }
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > 1e-9)
      throw InputError("sample file: row at line " + std::to_string(lineno) +
                       " is off the unit sphere by " + std::to_string(std::abs(norm - 1.0)));
    out.points.emplace_back(std::move(v));
    if (has_logp) out.log_prob.push_back(logp);
  }
  if (out.points.empty()) throw InputError("sample file: no rows");
  return out;
}

void save_samples(const std::string& path, const SampleSet& samples) {
  if (samples.points.empty()) throw InputError("save_samples: no rows");
  const int dim = samples.points.front().dim();
  const bool has_logp = !samples.log_prob.empty();
  if (has_logp && samples.log_prob.size() != samples.points.size())
    throw InputError("save_samples: logp column length mismatch");

  std::ostringstream out;
  for (int i = 0; i < dim; ++i) out << (i ? "," : "") << "x" << (i + 1);
  if (has_logp) out << ",logp";
  out << "\n";
  for (std::size_t r = 0; r < samples.points.size(); ++r) {
    const Eigen::VectorXd& v = samples.points[r].coords();
    for (int i = 0; i < dim; ++i) out << (i ? "," : "") << format17(v[i]);
    if (has_logp) out << "," << format17(samples.log_prob[r]);
    out << "\n";
  }
  write_file(path, out.str());
}

FitConfig fit_config_from_json(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) throw InputError("fit config: expected an object");
  FitConfig cfg;
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.multistart = j.value("multistart", cfg.multistart);
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    const std::string kind = o.value("kind", "adam");
    if (kind == "adam") {
      AdamLike a;
      a.beta1 = o.value("beta1", a.beta1);
      a.beta2 = o.value("beta2", a.beta2);
      a.epsilon = o.value("epsilon", a.epsilon);
      cfg.optimizer = a;
    } else if (kind == "gradient_descent" || kind == "gd") {
      cfg.optimizer = PlainGradientDescent{};
    } else {
      throw InputError("fit config: unknown optimizer " + kind);
    }
  }
  if (j.contains("gradient")) {
    const json& g = j.at("gradient");
    const std::string kind = g.value("kind", "central");
    if (kind == "central") {
      CentralDifference c;
      c.step = g.value("step", c.step);
      cfg.gradient = c;
    } else if (kind == "analytic") {
      cfg.gradient = AnalyticWhereAvailable{};
    } else {
      throw InputError("fit config: unknown gradient kind " + kind);
    }
  }
  if (cfg.iterations < 1) throw InputError("fit config: iterations must be at least 1");
  return cfg;
}

FitConfig load_fit_config(const std::string& path) {
  return fit_config_from_json(read_file(path));
}

void save_loss_trace(const std::string& path, const std::vector<double>& trace) {
  std::ostringstream out;
  out << "iteration,nll\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << format17(trace[i]) << "\n";
  write_file(path, out.str());
}

}  // namespace zlpf
