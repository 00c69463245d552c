#include "plateflow/pipeline/gate.hpp"

#include <thread>

namespace plateflow::pipeline {

CascadeGate::CascadeGate(haar::CascadeModel model, haar::ScanParams params)
    : model_(std::move(model)), params_(params) {
  haar::validate(model_);
  haar::validate(params_);
}

bool CascadeGate::wake(const GrayFrame& frame) { return !haar::scan(frame, model_, params_).empty(); }

SimulatedGate::SimulatedGate(std::chrono::microseconds latency, std::function<bool(std::int64_t)> decide)
    : latency_(latency), decide_(std::move(decide)) {}

bool SimulatedGate::wake(const GrayFrame& frame) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return decide_(frame.frame_index);
}

bool CountingGate::wake(const GrayFrame& frame) {
  ++calls_;
  const bool w = inner_.wake(frame);
  if (w) ++woke_;
  return w;
}

}  // namespace plateflow::pipeline
