#include <CLI11.hpp>
#include <cstdio>
#include <csignal>
#include <fstream>
#include <iostream>

#include "peerlearn/error.hpp"
#include "peerlearn/psm/pipeline.hpp"
#include "peerlearn/service/reports.hpp"
#include "peerlearn/service/server.hpp"
#include "peerlearn/sim/simulator.hpp"

using namespace peerlearn;

namespace {

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << text;
}

int serve(const std::string& config_path) {
  service::ServiceConfig config;
  if (!config_path.empty()) config = service::load_config(config_path);
  else service::apply_env_overrides(config);
  service::Server server(config);
  server.start();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.host << ":" << server.port() << " (storage " << config.storage_path
            << ", replayed " << server.replayed() << " events)\n";
  server.wait();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer learning service, cohort simulator and propensity-score toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config_path, "JSON config file");

  std::string storage = "./peerlearn-data", report_name, export_out;
  std::uint64_t offering_id = 0, caller_id = 0;
  bool research = false;
  auto* export_cmd = app.add_subcommand("export", "Write a CSV report from a storage directory");
  export_cmd->add_option("--storage", storage, "Storage directory")->capture_default_str();
  export_cmd->add_option("--offering", offering_id, "Offering id")->required();
  export_cmd->add_option("--as", caller_id, "Instructor user id")->required();
  export_cmd
      ->add_option("--report", report_name, "students|resources|comments|knowledge_units|attempts|grades|ledger")
      ->required();
  export_cmd->add_flag("--research", research, "Keep only consenting users");
  export_cmd->add_option("--out", export_out, "Output file (stdout when omitted)");

  std::size_t students = 200, questions = 100, topics = 1, attempts = 100;
  std::string policy = "random", sim_out;
  std::uint64_t seed = 1;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the synthetic cohort simulator");
  sim_cmd->add_option("--students", students)->capture_default_str();
  sim_cmd->add_option("--questions", questions)->capture_default_str();
  sim_cmd->add_option("--topics", topics)->capture_default_str();
  sim_cmd->add_option("--attempts", attempts, "Attempts per student")->capture_default_str();
  sim_cmd->add_option("--policy", policy, "random|recommended")->capture_default_str();
  sim_cmd->add_option("--seed", seed)->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Report CSV (stdout when omitted)");

  auto* psm_cmd = app.add_subcommand("psm", "Propensity-score matching toolkit");
  psm_cmd->require_subcommand(1);
  std::string input, psm_out, hist_out, scale = "score", ttest = "welch";
  double caliper = 0.05;
  auto* run_cmd = psm_cmd->add_subcommand("run", "Fit, match and compare from a subjects CSV");
  run_cmd->add_option("--input", input, "id,treated,gpa,age,residency,program_level,outcome")->required();
  run_cmd->add_option("--caliper", caliper)->capture_default_str();
  run_cmd->add_option("--caliper-scale", scale, "score|logit")->capture_default_str();
  run_cmd->add_option("--t-test", ttest, "welch|pooled")->capture_default_str();
  run_cmd->add_option("--out", psm_out, "JSON report file");
  run_cmd->add_option("--histograms", hist_out, "Histogram bin CSV");

  psm::GroupSummary a, b;
  auto* d_cmd = psm_cmd->add_subcommand("d", "Effect size from group summaries");
  d_cmd->add_option("--na", a.n)->required();
  d_cmd->add_option("--ma", a.mean)->required();
  d_cmd->add_option("--sa", a.sd)->required();
  d_cmd->add_option("--nb", b.n)->required();
  d_cmd->add_option("--mb", b.mean)->required();
  d_cmd->add_option("--sb", b.sd)->required();
  d_cmd->add_option("--t-test", ttest, "welch|pooled")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path);

    if (*export_cmd) {
      service::Engine engine;
      service::EventStore store(storage);
      store.load(engine);
      const OfferingId o{offering_id};
      const UserId caller{caller_id};
      std::string text;
      if (report_name == "grades") text = service::grades_csv(engine, caller, o);
      else if (report_name == "ledger") text = service::delta_ledger_ndjson(engine, caller, o);
      else text = service::export_report(engine, caller, o, service::parse_report(report_name), research);
      write_out(export_out, text);
      return 0;
    }

    if (*sim_cmd) {
      const auto fixture = sim::generate_cohort(students, questions, topics, seed);
      const auto report = sim::run_simulation(fixture, sim::parse_policy(policy), attempts, seed);
      write_out(sim_out, sim::report_csv(report));
      return 0;
    }

    const auto kind = ttest == "pooled" ? psm::TTestKind::Pooled : psm::TTestKind::Welch;
    if (ttest != "pooled" && ttest != "welch") fail(ErrorCode::Validation, "--t-test must be welch or pooled");

    if (*run_cmd) {
      std::ifstream in(input);
      if (!in) fail(ErrorCode::Io, "cannot read " + input);
      const auto subjects = psm::read_subjects(in);
      psm::PipelineOptions opts;
      opts.caliper = caliper;
      opts.scale = psm::parse_caliper_scale(scale);
      opts.t_test = kind;
      const auto report = psm::run_pipeline(subjects, opts);
      std::cout << psm::format_table(report);
      if (!psm_out.empty()) write_out(psm_out, psm::to_json_report(report, subjects).dump(2) + "\n");
      if (!hist_out.empty()) write_out(hist_out, psm::histograms_csv(report.balance));
      return 0;
    }

    if (*d_cmd) {
      const auto c = psm::compare_summaries(a, b, kind);
      std::printf("d = %.3f\nt = %.4f\ndf = %.2f\np = %.3g\n", c.cohens_d, c.t_test.t, c.t_test.df, c.t_test.p_value);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return 2;
  }
  return 0;
}
