// Runs the eleven acceptance checks at full size; one PASS/FAIL line each.
// Usage: acceptance [--only 1,3,7] [--report PATH] [--threads N]

#include <cstdio>
#include <thread>

#include "CLI11.hpp"

#include "bodyflock/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace bodyflock;
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string report;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--only", only, "check ids")->delimiter(',');
  app.add_option("--report", report, "write the JSON report here");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  acceptance::SuiteOptions opt;
  opt.threads = threads;
  opt.only.insert(only.begin(), only.end());
  opt.on_result = [](const acceptance::CheckResult& r) {
    std::printf("%s\n", acceptance::summary_line(r).c_str());
    std::fflush(stdout);
  };
  const auto results = acceptance::run_suite(opt);
  const Json j = acceptance::report_json(results);
  if (!report.empty()) write_json(report, j);
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      std::printf("  [%d] measured: %s\n", r.id, r.measured.dump().c_str());
    }
  }
  std::printf("%zu/%zu checks passed\n", results.size() - failed, results.size());
  return failed ? 1 : 0;
}
