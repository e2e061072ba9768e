#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "nnrk/driver.hpp"
#include "nnrk/errors.hpp"
#include "nnrk/export.hpp"
#include "nnrk/study.hpp"

using namespace nnrk;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nnrk_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("zero-state cell export") {
  Simulation sim(parse_config(fixture::patch_json()));
  const CellFields f = cell_fields(sim.model(false), sim.state().p);
  std::ostringstream os;
  write_cell_csv(f, os);
  const auto rows = lines(os.str());
  CHECK(rows.size() == 1 + sim.problem().mesh.num_cells());
  CHECK(f.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.eta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("VTK file structure") {
  Simulation sim(parse_config(fixture::patch_json(4, 3)));
  const auto& mesh = sim.problem().mesh;
  std::ostringstream os;
  write_vtk(mesh, cell_fields(sim.model(false), sim.state().p), os);
  const auto rows = lines(os.str());
  REQUIRE(rows.size() > 5);
  CHECK(rows[0] == "# vtk DataFile Version 3.0");
  CHECK(rows[2] == "ASCII");
  CHECK(rows[3] == "DATASET UNSTRUCTURED_GRID");
  std::size_t npts = 0;
  for (const auto& c : mesh.cells) npts += c.polygon.size();
  CHECK(rows[4] == "POINTS " + std::to_string(npts) + " double");
  const std::string cells = "CELLS " + std::to_string(mesh.num_cells()) + " " + std::to_string(npts + mesh.num_cells());
  CHECK(rows[5 + npts] == cells);
  CHECK(std::count(rows.begin(), rows.end(), "CELL_DATA " + std::to_string(mesh.num_cells())) == 1);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const std::string& r) { return r.rfind("SCALARS", 0) == 0; }) == 12);
}

TEST_CASE("run writes records, curves, fields and a checkpoint") {
  const fs::path dir = scratch("run");
  RunConfig cfg = parse_config(fixture::bar_json(1e-3, 2));
  cfg.output.vtk = true;
  cfg.output.transect = Transect{Vec2(0, 0.125), Vec2(1, 0.125), 11};
  Simulation sim(cfg);
  RunOptions o;
  o.output_dir = dir;
  run_simulation(sim, o);
  for (const char* f : {"config.json", "mesh.csv", "steps.csv", "load_displacement.csv", "checkpoint.json",
                        "cells_0001.csv", "cells_0002.vtk", "transect_0002.csv"})
    CHECK(fs::exists(dir / f));
  std::ifstream curve(dir / "load_displacement.csv");
  std::stringstream ss;
  ss << curve.rdbuf();
  CHECK(lines(ss.str()).size() == 3);
  std::ifstream tr(dir / "transect_0002.csv");
  std::stringstream ts;
  ts << tr.rdbuf();
  const auto t = lines(ts.str());
  CHECK(t.size() == 12);
  CHECK(t[0] == "s,x,y,u1,u2,u_rk1,u_rk2,u_nn1,u_nn2,eps11,eps22,eps12");
  fs::remove_all(dir);
}

TEST_CASE("atomic write replaces the file") {
  const fs::path dir = scratch("atomic");
  fs::create_directories(dir);
  write_file_atomic(dir / "a.txt", "one");
  write_file_atomic(dir / "a.txt", "two");
  std::ifstream in(dir / "a.txt");
  std::string s;
  in >> s;
  CHECK(s == "two");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
  fs::remove_all(dir);
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(loglog_slope({0.1, 0.05, 0.025}, {1e-2, 5e-3, 2.5e-3}) == doctest::Approx(1.0));
}

TEST_CASE("error norms vanish for a reproduced field") {
  const RunConfig cfg = parse_config(fixture::patch_json());
  Simulation sim(cfg);
  RunOptions o;
  o.write_outputs = false;
  run_simulation(sim, o);
  auto v = cfg.variables();
  v["step"] = v["steps"] = v["t"] = 1;
  const ErrorNorms e = error_norms(sim.model(false), sim.state().p, *cfg.exact, v);
  CHECK(e.l2_rel < 1e-8);
  CHECK(e.h1_rel < 1e-6);
}

TEST_CASE("convergence study needs three points and is deterministic") {
  std::string json = fixture::patch_json();
  json.insert(json.rfind('}'), R"(, "study": {"parameter": "mesh", "values": [[3, 2], [5, 3]]})");
  CHECK_THROWS_AS(run_convergence(parse_config(json)), ConfigError);

  std::string three = fixture::patch_json();
  three.insert(three.rfind('}'), R"(, "study": {"parameter": "mesh", "values": [[3, 2], [5, 3], [9, 5]]})");
  const RunConfig cfg = parse_config(three);
  const ConvergenceTable a = run_convergence(cfg), b = run_convergence(cfg);
  REQUIRE(a.rows.size() == 3);
  CHECK(a.rows[0].parameter == doctest::Approx(1.0));
  for (int k = 0; k < 3; ++k) CHECK(a.rows[k].error.l2 == b.rows[k].error.l2);
  std::ostringstream os;
  write_convergence_csv(a, os);
  CHECK(lines(os.str()).size() == 5);
}
