#pragma once

#include "CLI11.hpp"

namespace esp::cli {

/// Each register_* call adds a subcommand whose callback does the work.
void register_ingest(CLI::App& app);
void register_split(CLI::App& app);
void register_lda(CLI::App& app);
void register_train(CLI::App& app);
void register_ensemble(CLI::App& app);
void register_rank(CLI::App& app);
void register_eval(CLI::App& app);
void register_synth(CLI::App& app);

}  // namespace esp::cli
