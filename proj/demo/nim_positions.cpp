// SPDX-License-Identifier: Apache-2.0
// Prints Grundy values, winning moves and board encodings for a few Nim
// positions, then a short random playout with its labels.

#include <iostream>

#include "paritylab/config.hpp"
#include "paritylab/datagen.hpp"
#include "paritylab/nim.hpp"

using namespace paritylab;

int main() {
  for (const nim::Position& pos : {nim::Position{{1, 2, 3}}, nim::Position{{3, 4, 5}}, nim::Position{{5, 5, 5}}}) {
    std::cout << "[" << join_unsigned(pos.heaps) << "] grundy " << nim::grundy(pos) << "  board "
              << nim::encode_board(pos, 5).bits.literal() << "  winning moves:";
    if (nim::is_winning(pos)) {
      for (const auto& m : nim::winning_moves(pos)) std::cout << " heap " << m.heap << " take " << m.take << ";";
    } else {
      std::cout << " none";
    }
    std::cout << "\n";
  }

  Rng rng = Rng::substream(1, Stream::train_data);
  std::cout << "\nplayout from [5,5,5]:\n";
  for (const auto& board : sample_nim_trajectory({{5, 5, 5}}, 5, rng)) {
    std::cout << "  " << board.bits.literal() << "  label " << oracle_label(SamplerKind::nim_trajectory, board.bits) << "\n";
  }
}
