// SPDX-License-Identifier: Apache-2.0
// Trains the LSTM on length-10 latent-curriculum parity with 10% initial
// label noise and prints the evaluation trace.
//
//   parity_training [n] [rho0] [seed]

#include <cstdlib>
#include <iostream>

#include "paritylab/trainer.hpp"

using namespace paritylab;

int main(int argc, char** argv) {
  TrainConfig config;
  config.sampler = SamplerSpec::bits(SamplerKind::latent_curriculum, argc > 1 ? parse_uint(argv[1]) : 10);
  config.schedule.rho0 = argc > 2 ? parse_double(argv[2]) : 0.1;
  config.master_seed = argc > 3 ? parse_uint(argv[3]) : 1;
  config.max_steps = 300'000;

  TrainOptions options;
  options.on_evaluation = [](const TraceEntry& e) {
    std::cout << "step " << e.step << "  accuracy " << e.accuracy << "  rho " << e.rho << "\n";
  };
  const auto record = train(config, options);
  std::cout << to_string(record.outcome);
  if (record.steps_to_success) std::cout << " after " << *record.steps_to_success << " steps";
  std::cout << " (" << record.corrupted_labels << " labels flipped, " << record.wall_time_s << " s)\n";
}
