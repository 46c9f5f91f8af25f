#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "vort/experiments.hpp"
#include "vort/io.hpp"

using namespace vort;

namespace {

std::string write_config(const std::string& name, const std::string& text) {
  ensure_dir("exp_test_cfg");
  const std::string path = "exp_test_cfg/" + name;
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fputs(text.c_str(), f);
  std::fclose(f);
  return path;
}

}  // namespace

TEST_CASE("defaults, overlay, and seed precedence") {
  const ExperimentConfig d =
      ExperimentConfig::load("invariance", "", 0, "out", 1, false);
  CHECK(d.M == 4);
  CHECK(d.cutoff == 8.0);
  CHECK(d.N_grid == std::vector<double>{8.0});
  CHECK(d.n_traj == 10000);
  CHECK(d.phis == std::vector<std::string>{"gauss_r1", "gauss_r2"});
  CHECK(d.z_max == 4.0);

  const std::string cfg = write_config("overlay.cfg",
                                       "M = 2\n"
                                       "cutoff = 12\n"
                                       "N = 4, 8\n"
                                       "n_traj = 500\n"
                                       "seed = 42\n"
                                       "phi = gauss_r1\n");
  const ExperimentConfig a = ExperimentConfig::load("invariance", cfg, 0, "o", 2, true);
  CHECK(a.M == 2);
  CHECK(a.cutoff == 12.0);
  CHECK(a.N_grid == std::vector<double>{4.0, 8.0});
  CHECK(a.n_traj == 500);
  CHECK(a.seed == 42);  // config seed applies when the CLI leaves it at 0
  CHECK(a.threads == 2);
  CHECK(a.negative_control);
  CHECK(a.phis == std::vector<std::string>{"gauss_r1"});

  const ExperimentConfig b = ExperimentConfig::load("invariance", cfg, 7, "o", 1, false);
  CHECK(b.seed == 7);  // explicit CLI seed wins

  CHECK_THROWS(ExperimentConfig::load("unknown-kind", "", 0, "o", 1, false));
}

TEST_CASE("validation rejects inconsistent descriptions") {
  auto base = [] { return ExperimentConfig::load("invariance", "", 1, "o", 1, false); };
  {
    ExperimentConfig e = base();
    e.cutoff = 4.0;  // below max N
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = base();
    e.n_traj = 50;  // statistical run needs a real ensemble
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = base();
    e.record_every = 0;
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = base();
    e.thetas = {1.5};
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = base();
    e.T = e.dt / 2.0;
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = ExperimentConfig::load("sandwich", "", 1, "o", 1, false);
    e.thetas = {0.5};  // the sandwich battery is defined at theta = 1
    CHECK_THROWS(e.validate());
  }
  {
    ExperimentConfig e = ExperimentConfig::load("triviality", "", 1, "o", 1, false);
    e.thetas = {1.0};  // the decay battery needs theta < 1
    CHECK_THROWS(e.validate());
  }
}

TEST_CASE("unknown configuration keys are rejected at run time") {
  const std::string cfg = write_config("bogus.cfg",
                                       "M = 1\ncutoff = 4\nN = 4\nn_traj = 120\n"
                                       "dt = 0.1\nT = 0.2\nbogus_key = 1\n");
  ExperimentConfig ec = ExperimentConfig::load("calibrate", cfg, 3, "exp_test_out/bogus", 1, false);
  CHECK_THROWS(run_experiment(ec));
}

TEST_CASE("calibration battery passes and its fault injection fails") {
  const std::string cfg = write_config("cal.cfg",
                                       "M = 1\ncutoff = 4\nN = 4\nn_traj = 150\n"
                                       "dt = 0.1\nT = 0.2\n");
  ExperimentConfig ec =
      ExperimentConfig::load("calibrate", cfg, 11, "exp_test_out/cal", 1, false);
  const RunOutcome ok = run_experiment(ec);
  for (const auto& line : ok.checks) CAPTURE(line);
  CHECK(ok.pass);
  CHECK(!ok.files.empty());

  ExperimentConfig bad =
      ExperimentConfig::load("calibrate", cfg, 11, "exp_test_out/cal_neg", 1, true);
  const RunOutcome fail = run_experiment(bad);
  CHECK(!fail.pass);
}

TEST_CASE("stationarity run is reproducible byte for byte across thread counts") {
  const std::string cfg = write_config("inv.cfg",
                                       "M = 1\ncutoff = 4\nN = 4\nn_traj = 120\n"
                                       "dt = 0.01\nT = 0.05\nrecord_every = 5\n");
  ExperimentConfig a =
      ExperimentConfig::load("invariance", cfg, 21, "exp_test_out/inv_a", 1, false);
  ExperimentConfig b =
      ExperimentConfig::load("invariance", cfg, 21, "exp_test_out/inv_b", 2, false);
  ExperimentConfig c =
      ExperimentConfig::load("invariance", cfg, 21, "exp_test_out/inv_c", 2, false);
  const RunOutcome ra = run_experiment(a);
  for (const auto& line : ra.checks) CAPTURE(line);
  CHECK(ra.pass);
  const RunOutcome rb = run_experiment(b);
  const RunOutcome rc = run_experiment(c);
  CHECK(rb.pass);
  CHECK(rc.pass);

  const std::string csv_a = read_text_file("exp_test_out/inv_a/invariance_moments.csv");
  const std::string csv_b = read_text_file("exp_test_out/inv_b/invariance_moments.csv");
  const std::string csv_c = read_text_file("exp_test_out/inv_c/invariance_moments.csv");
  CHECK(csv_a == csv_b);
  CHECK(csv_b == csv_c);

  // the run fingerprint ignores the thread count; the seed is baked in
  const auto ma = nlohmann::json::parse(read_text_file("exp_test_out/inv_a/manifest.json"));
  const auto mb = nlohmann::json::parse(read_text_file("exp_test_out/inv_b/manifest.json"));
  CHECK(ma["input_hash"] == mb["input_hash"]);
  CHECK(ma["seed"] == 21);
  CHECK(ma["status"]["ok"] == true);

  ExperimentConfig d =
      ExperimentConfig::load("invariance", cfg, 22, "exp_test_out/inv_d", 1, false);
  const RunOutcome rd = run_experiment(d);
  const auto md = nlohmann::json::parse(read_text_file("exp_test_out/inv_d/manifest.json"));
  CHECK(ma["input_hash"] != md["input_hash"]);
  (void)rd;
}

TEST_CASE("manifest lists every output with a correct digest") {
  const auto m = nlohmann::json::parse(read_text_file("exp_test_out/inv_a/manifest.json"));
  CHECK(m.contains("experiment"));
  CHECK(m.contains("created_utc"));
  CHECK(m.contains("parameters"));
  CHECK(m.contains("thresholds"));
  CHECK(m.contains("checks"));
  REQUIRE(m.contains("outputs"));
  bool saw_manifest = false, saw_csv = false;
  for (const auto& entry : m["outputs"]) {
    const std::string rel_path = entry["path"].get<std::string>();
    if (rel_path == "manifest.json") {
      saw_manifest = true;
      continue;
    }
    if (rel_path == "invariance_moments.csv") saw_csv = true;
    REQUIRE(entry.contains("sha256"));
    CHECK(entry["sha256"].get<std::string>() ==
          sha256_file("exp_test_out/inv_a/" + rel_path));
  }
  CHECK(saw_manifest);
  CHECK(saw_csv);
}

TEST_CASE("majorant sweep collapses identically at zero coupling") {
  const std::string cfg = write_config("scal0.cfg",
                                       "M = 1\ncutoff = 8\nN = 4, 5, 6, 8\n"
                                       "theta = 0.5\nlambda_hat = 0\n"
                                       "mc_traj = 100\ndt = 0.05\nT = 0.1\n");
  ExperimentConfig ec =
      ExperimentConfig::load("scaling", cfg, 31, "exp_test_out/scal0", 1, false);
  const RunOutcome r = run_experiment(ec);
  for (const auto& line : r.checks) CAPTURE(line);
  CHECK(r.pass);
}

TEST_CASE("fixing the coupling strength breaks the subcritical slopes") {
  const std::string cfg = write_config("scalneg.cfg",
                                       "M = 1\ncutoff = 12\nN = 4, 6, 8, 12\n"
                                       "theta = 0.5\ndt = 0.05\nT = 0.1\n");
  ExperimentConfig ec =
      ExperimentConfig::load("scaling", cfg, 32, "exp_test_out/scalneg", 1, true);
  const RunOutcome r = run_experiment(ec);
  CHECK(!r.pass);
}

TEST_CASE("coupled-decay battery passes and its fault injection fails") {
  // Desk-scale smoke with a loosened decrease factor: at this grid span and
  // horizon the genuine sup-moment drop is ~x2.7-3.7 (the N=4 endpoint sits
  // on the mollifier-ramp hump), while the coupling fault flattens the
  // distance ratio to ~x1, so a factor-2 gate separates them cleanly.
  const std::string cfg = write_config("triv.cfg",
                                       "M = 1\ncutoff = 64\nN = 4, 64\n"
                                       "theta = 0.5\ntraj_grid = 200, 100\n"
                                       "decrease_factor = 2\n"
                                       "dt = 0.05\nT = 3.0\nrecord_every = 5\n");
  ExperimentConfig ec =
      ExperimentConfig::load("triviality", cfg, 41, "exp_test_out/triv", 1, false);
  const RunOutcome r = run_experiment(ec);
  for (const auto& line : r.checks) CAPTURE(line);
  CHECK(r.pass);

  ExperimentConfig bad =
      ExperimentConfig::load("triviality", cfg, 41, "exp_test_out/triv_neg", 1, true);
  const RunOutcome f = run_experiment(bad);
  CHECK(!f.pass);
}

TEST_CASE("operator battery passes and its fault injection fails") {
  const std::string cfg = write_config("chaos.cfg",
                                       "M = 1\ncutoff = 8\nN = 8\n"
                                       "pair_count = 8\nn_traj = 300\n");
  ExperimentConfig ec =
      ExperimentConfig::load("chaos-check", cfg, 51, "exp_test_out/chaos", 1, false);
  const RunOutcome r = run_experiment(ec);
  for (const auto& line : r.checks) CAPTURE(line);
  CHECK(r.pass);

  ExperimentConfig bad =
      ExperimentConfig::load("chaos-check", cfg, 51, "exp_test_out/chaos_neg", 1, true);
  const RunOutcome f = run_experiment(bad);
  CHECK(!f.pass);
}

TEST_CASE("bound battery smoke with loosened thresholds") {
  const std::string cfg = write_config("sand.cfg",
                                       "M = 4\ncutoff = 32\nN = 16, 32\n"
                                       "mc_N = 8\nmc_phi_cutoff = 4\nmc_traj = 100\n"
                                       "n_traj = 100\ndt = 0.05\nT = 2.5\n"
                                       "record_every = 10\n"
                                       "lb_floor = 0.005\nsector_rel_tol = 0.5\n");
  ExperimentConfig ec =
      ExperimentConfig::load("sandwich", cfg, 61, "exp_test_out/sand", 1, false);
  const RunOutcome r = run_experiment(ec);
  for (const auto& line : r.checks) CAPTURE(line);
  CHECK(r.pass);
  bool has_det_csv = false, has_mc_csv = false;
  for (const auto& f : r.files) {
    if (f.find("sandwich_curves.csv") != std::string::npos) has_det_csv = true;
    if (f.find("sandwich_mc.csv") != std::string::npos) has_mc_csv = true;
  }
  CHECK(has_det_csv);
  CHECK(has_mc_csv);
}
