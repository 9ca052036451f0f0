#pragma once

#include "bongard/core/types.hpp"

namespace bongard::core {

struct TestSplit {
  BongardProblem reduced;
  TestPair pair;
};

// Synthetic problems give up their 6th panel per side as the test pair;
// every other dataset must supply dedicated test images.
inline TestSplit make_test_split(const BongardProblem& bp) {
  TestSplit out;
  out.reduced = bp;
  if (bp.dataset == DatasetKind::Synthetic) {
    out.pair.first = bp.left.back();
    out.pair.second = bp.right.back();
    out.pair.first_side = Side::Left;
    out.pair.second_side = Side::Right;
    out.reduced.left.pop_back();
    out.reduced.right.pop_back();
    out.reduced.extra_tests.reset();
  } else {
    if (!bp.extra_tests)
      throw MissingTestImagesError("problem " + bp.id + " has no test images and is not synthetic");
    out.pair.first = bp.extra_tests->first;
    out.pair.second = bp.extra_tests->second;
    out.pair.first_side = Side::Left;
    out.pair.second_side = Side::Right;
  }
  return out;
}

}  // namespace bongard::core
