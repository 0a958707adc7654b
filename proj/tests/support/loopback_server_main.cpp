// Protocol v1 scorer over stdin/stdout for bridge tests.

#include <iostream>
#include <memory>

#include <unistd.h>

#include <CLI11.hpp>

#include "loopback_server.hpp"

int main(int argc, char** argv) {
  using namespace seqmc;

  CLI::App app{"loopback scorer server"};
  std::string table;
  std::int64_t fixed_vocab = 0;
  std::int64_t fixed_length = 8;
  std::int64_t mask_id = -1;
  bool mask_outside = false;
  testing::ServerFaults faults;
  std::string drop_once;

  auto* source = app.add_option_group("backend");
  source->add_option("--table", table, "tabular model file");
  source->add_option("--fixed-rows", fixed_vocab, "serve fixed rows over this vocabulary size");
  source->require_option(1);
  app.add_option("--fixed-length", fixed_length, "max_length reported in fixed-rows mode");
  app.add_option("--mask-id", mask_id, "server-side mask id (default: appended after the vocabulary)");
  app.add_flag("--mask-outside", mask_outside, "report vocab_size = |V| with the mask at |V|");
  app.add_option("--protocol-version", faults.protocol_version);
  app.add_flag("--garbage", faults.garbage_logits);
  app.add_flag("--wrong-id", faults.wrong_id);
  app.add_option("--drop-once", drop_once, "marker file; close on the first request if absent");
  CLI11_PARSE(app, argc, argv);
  if (!drop_once.empty()) faults.drop_once_marker = drop_once;

  testing::TabularService service;
  try {
    if (!table.empty()) {
      auto model = std::make_shared<const TabularMLM>(TabularMLM::load(table));
      const auto v = static_cast<std::int64_t>(model->vocab().size());
      service = testing::tabular_service(model, mask_id < 0 ? v : mask_id, !mask_outside);
    } else {
      service = testing::fixed_rows_service(fixed_vocab, fixed_length);
    }
  } catch (const std::exception& e) {
    std::cerr << "cannot load backend: " << e.what() << '\n';
    return 1;
  }
  testing::serve_connection(STDIN_FILENO, STDOUT_FILENO, service.info, service.backend, faults, false);
  return 0;
}
