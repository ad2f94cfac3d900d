#pragma once

#include <memory>

#include "gripsim/slip.hpp"

namespace gripsim::testkit {

// Hand-set linear classifier on grounded P_dc (feature 0) and P_ac
// peak-to-peak (feature 2): no contact below 10 s.p.u., slip above 40 p-p.
inline std::shared_ptr<const slip::Classifier> threshold_classifier() {
  slip::Standardizer s;
  s.mean.fill(0.0);
  s.stddev.fill(1.0);
  slip::Classifier::Weights w{};
  const int bias = slip::kFeatureDim;
  w[class_index(ContactClass::Contact)][0] = 1.0;
  w[class_index(ContactClass::Contact)][bias] = -10.0;
  w[class_index(ContactClass::Slip)][0] = 1.0;
  w[class_index(ContactClass::Slip)][2] = 1.0;
  w[class_index(ContactClass::Slip)][bias] = -50.0;
  return std::make_shared<const slip::Classifier>(slip::Classifier::linear(s, w));
}

}  // namespace gripsim::testkit
