#pragma once

#include <stdexcept>
#include <string>

namespace cmla {

/// Pipeline stage that raised an error. The CLI reports it verbatim.
enum class Stage {
  dataset_core,
  encoder,
  cluster_engine,
  leakage_metrics,
  synth_harness,
  audit_report,
  audit_cli,
};

const char* stage_name(Stage stage) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& message)
      : std::runtime_error(message), stage_(stage) {}

  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

}  // namespace cmla
