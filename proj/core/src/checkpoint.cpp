#include "nnrk/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/export.hpp"

namespace nnrk {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json loss_json(const LossBreakdown& l) {
  return {{"strain", l.strain}, {"external", l.external}, {"reg", l.reg}, {"bc", l.bc}, {"total", l.total}};
}

LossBreakdown json_loss(const json& j) {
  LossBreakdown l;
  l.strain = j.at("strain").get<double>();
  l.external = j.at("external").get<double>();
  l.reg = j.at("reg").get<double>();
  l.bc = j.at("bc").get<double>();
  l.total = j.at("total").get<double>();
  return l;
}

}  // namespace

std::string checkpoint_to_string(const SimulationState& s, const std::string& config_name) {
  json j;
  j["format"] = "nnrk-checkpoint";
  j["version"] = checkpoint_version;
  j["config"] = config_name;
  j["step"] = s.step;
  j["network"] = s.network;
  j["p"] = vec_json(s.p);
  j["H"] = vec_json(s.material.H);
  j["eta"] = vec_json(s.material.eta);
  j["Gc"] = vec_json(s.material.Gc);
  j["dissipation"] = vec_json(s.material.p);
  std::vector<int> enriched;
  for (std::size_t I = 0; I < s.enriched.size(); ++I)
    if (s.enriched[I]) enriched.push_back(static_cast<int>(I));
  j["num_nodes"] = s.enriched.size();
  j["enriched"] = enriched;
  json dir = json::array();
  for (const auto& d : s.dirichlet)
    dir.push_back({{"boundary", d.boundary},
                   {"fixed", {d.fixed[0], d.fixed[1]}},
                   {"g", {d.g(0), d.g(1)}},
                   {"multiplier", {d.multiplier(0), d.multiplier(1)}},
                   {"driven", d.driven}});
  j["dirichlet"] = dir;
  json recs = json::array();
  for (const auto& r : s.records)
    recs.push_back({{"step", r.step},
                    {"loss", loss_json(r.loss)},
                    {"load", {r.load(0), r.load(1)}},
                    {"reaction", {r.reaction(0), r.reaction(1)}},
                    {"eta", vec_json(r.eta)},
                    {"enriched", r.enriched},
                    {"network", r.network},
                    {"newton_iterations", r.newton_iterations},
                    {"adam_epochs", r.adam_epochs},
                    {"lbfgs_iterations", r.lbfgs_iterations},
                    {"lbfgs_status", r.lbfgs_status},
                    {"stage_b_entry", r.stage_b_entry},
                    {"stage_b_exit", r.stage_b_exit},
                    {"wall_seconds", r.wall_seconds}});
  j["records"] = recs;
  return j.dump() + "\n";
}

SimulationState checkpoint_from_string(const std::string& text) {
  SimulationState s;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "nnrk-checkpoint") throw Error("not an nnrk checkpoint");
    const int version = j.at("version").get<int>();
    if (version != checkpoint_version)
      throw Error("unsupported checkpoint version " + std::to_string(version));
    s.step = j.at("step").get<int>();
    s.network = j.at("network").get<bool>();
    s.p = json_vec(j.at("p"));
    s.material.H = json_vec(j.at("H"));
    s.material.eta = json_vec(j.at("eta"));
    s.material.Gc = json_vec(j.at("Gc"));
    s.material.p = json_vec(j.at("dissipation"));
    s.enriched.assign(j.at("num_nodes").get<std::size_t>(), 0);
    for (int I : j.at("enriched").get<std::vector<int>>()) s.enriched.at(I) = 1;
    for (const auto& d : j.at("dirichlet")) {
      DirichletSegment seg;
      seg.boundary = d.at("boundary").get<int>();
      seg.fixed = {d.at("fixed")[0].get<bool>(), d.at("fixed")[1].get<bool>()};
      seg.g = Vec2(d.at("g")[0].get<double>(), d.at("g")[1].get<double>());
      seg.multiplier = Vec2(d.at("multiplier")[0].get<double>(), d.at("multiplier")[1].get<double>());
      seg.driven = d.at("driven").get<bool>();
      s.dirichlet.push_back(seg);
    }
    for (const auto& r : j.at("records")) {
      StepRecord rec;
      rec.step = r.at("step").get<int>();
      rec.loss = json_loss(r.at("loss"));
      rec.load = Vec2(r.at("load")[0].get<double>(), r.at("load")[1].get<double>());
      rec.reaction = Vec2(r.at("reaction")[0].get<double>(), r.at("reaction")[1].get<double>());
      rec.eta = json_vec(r.at("eta"));
      rec.enriched = r.at("enriched").get<int>();
      rec.network = r.at("network").get<bool>();
      rec.newton_iterations = r.at("newton_iterations").get<int>();
      rec.adam_epochs = r.at("adam_epochs").get<int>();
      rec.lbfgs_iterations = r.at("lbfgs_iterations").get<int>();
      rec.lbfgs_status = r.at("lbfgs_status").get<std::string>();
      rec.stage_b_entry = r.at("stage_b_entry").get<double>();
      rec.stage_b_exit = r.at("stage_b_exit").get<double>();
      rec.wall_seconds = r.at("wall_seconds").get<double>();
      s.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const SimulationState& s, const std::string& config_name) {
  write_file_atomic(path, checkpoint_to_string(s, config_name));
}

SimulationState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace nnrk
