#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>

#include "plateflow/haar/cascade.hpp"
#include "plateflow/haar/scan.hpp"
#include "plateflow/image.hpp"

namespace plateflow::pipeline {

/// The wake-up stage: decides whether a frame is worth a backbone pass.
class Gate {
 public:
  virtual ~Gate() = default;
  virtual bool wake(const GrayFrame& frame) = 0;
  virtual std::string name() const = 0;
};

/// Wakes iff the cascade scan returns at least one grouped box.
class CascadeGate : public Gate {
 public:
  CascadeGate(haar::CascadeModel model, haar::ScanParams params);
  bool wake(const GrayFrame& frame) override;
  std::string name() const override { return "cascade"; }

 private:
  haar::CascadeModel model_;
  haar::ScanParams params_;
};

/// Ablation mode: every frame goes to the backbone.
class DisabledGate : public Gate {
 public:
  bool wake(const GrayFrame&) override { return true; }
  std::string name() const override { return "disabled"; }
};

/// Fixed-latency gate whose decision comes from a predicate on frame_index.
class SimulatedGate : public Gate {
 public:
  SimulatedGate(std::chrono::microseconds latency, std::function<bool(std::int64_t)> decide);
  bool wake(const GrayFrame& frame) override;
  std::string name() const override { return "simulated"; }

 private:
  std::chrono::microseconds latency_;
  std::function<bool(std::int64_t)> decide_;
};

/// Counts invocations of another gate.
class CountingGate : public Gate {
 public:
  explicit CountingGate(Gate& inner) : inner_(inner) {}
  bool wake(const GrayFrame& frame) override;
  std::string name() const override { return inner_.name(); }
  long calls() const { return calls_; }
  long woke() const { return woke_; }

 private:
  Gate& inner_;
  std::atomic<long> calls_{0};
  std::atomic<long> woke_{0};
};

}  // namespace plateflow::pipeline
