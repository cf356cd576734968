#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "esp/common/error.hpp"

namespace {

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"esp: spectrum prediction and candidate ranking"};
  app.require_subcommand(1);
  esp::cli::register_ingest(app);
  esp::cli::register_split(app);
  esp::cli::register_lda(app);
  esp::cli::register_train(app);
  esp::cli::register_ensemble(app);
  esp::cli::register_rank(app);
  esp::cli::register_eval(app);
  esp::cli::register_synth(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  } catch (const esp::Error& e) {
    std::cerr << "esp: " << e.what() << "\n";
    return e.is_numerical() ? kNumericalError : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "esp: " << e.what() << "\n";
    return kInputError;
  }
  return 0;
}
