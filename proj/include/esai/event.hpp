#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "esai/errors.hpp"
#include "esai/image.hpp"

namespace esai {

/// One brightness-change record. Timestamps are integer microseconds
/// (DAVIS convention); geometry converts to seconds at use sites.
struct Event {
  int64_t t = 0;  // microseconds, non-negative
  int x = 0;      // column, 0-based
  int y = 0;      // row, 0-based
  int p = 1;      // polarity, +1 or -1
};

struct EventStream {
  std::vector<Event> events;
  int width = 0;
  int height = 0;
  int64_t t_min = 0;
  int64_t t_max = 0;

  size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

enum class EventCategory : uint8_t { AA, OO, OA, NOISE };

/// Event stream plus one category label per event.
struct LabeledEventStream {
  EventStream stream;
  std::vector<EventCategory> labels;
};

inline void validate_stream(const EventStream& s) {
  int64_t prev = s.t_min;
  for (size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    if (e.p != 1 && e.p != -1)
      throw DataError("event " + std::to_string(i) + ": polarity must be +1 or -1");
    if (e.x < 0 || e.x >= s.width || e.y < 0 || e.y >= s.height)
      throw DataError("event " + std::to_string(i) + ": position (" + std::to_string(e.x) +
                      "," + std::to_string(e.y) + ") outside resolution " +
                      std::to_string(s.width) + "x" + std::to_string(s.height));
    if (e.t < prev)
      throw DataError("event " + std::to_string(i) + ": timestamps not sorted");
    if (e.t < s.t_min || e.t > s.t_max)
      throw DataError("event " + std::to_string(i) + ": timestamp outside stream span");
    prev = e.t;
  }
}

/// Spatio-temporal event binning: data has shape (n, 2, h, w) with channel 0
/// counting positive and channel 1 negative events.
struct FrameStack {
  int n = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;          // (n, 2, h, w) row-major
  std::vector<double> t_edges;       // n+1 interval edges, microseconds

  FrameStack() = default;
  FrameStack(int n_, int h_, int w_)
      : n(n_), h(h_), w(w_), data(static_cast<size_t>(n_) * 2 * h_ * w_, 0.0) {}

  double& at(int i, int pol, int y, int x) {
    return data[((static_cast<size_t>(i) * 2 + pol) * h + y) * w + x];
  }
  double at(int i, int pol, int y, int x) const {
    return data[((static_cast<size_t>(i) * 2 + pol) * h + y) * w + x];
  }
  /// Pointer to one (interval, polarity) frame of h*w values.
  const double* frame(int i, int pol) const {
    return data.data() + (static_cast<size_t>(i) * 2 + pol) * h * w;
  }
  double* frame(int i, int pol) {
    return data.data() + (static_cast<size_t>(i) * 2 + pol) * h * w;
  }
};

/// Bins events of `stream` into `n` equal-width intervals over [t0, t1].
/// Intervals are half-open [edge_i, edge_{i+1}) except the last, which
/// includes t1. Events outside the window are ignored.
inline FrameStack stack_events(const EventStream& stream, int n,
                               std::pair<int64_t, int64_t> window) {
  if (n < 1) throw InvalidArgument("stack_events: interval count must be >= 1");
  const auto [t0, t1] = window;
  if (t0 >= t1) throw InvalidArgument("stack_events: window must satisfy t0 < t1");
  FrameStack st(n, stream.height, stream.width);
  st.t_edges.resize(n + 1);
  const double span = static_cast<double>(t1 - t0);
  for (int k = 0; k <= n; ++k) st.t_edges[k] = t0 + span * k / n;
  for (const Event& e : stream.events) {
    if (e.t < t0 || e.t > t1) continue;
    // Exact integer bin index; t == t1 falls in the last bin.
    int64_t bin = ((e.t - t0) * n) / (t1 - t0);
    if (bin == n) bin = n - 1;
    st.at(static_cast<int>(bin), e.p > 0 ? 0 : 1, e.y, e.x) += 1.0;
  }
  return st;
}

/// Splits by polarity, preserving order: (positives, negatives).
inline std::pair<EventStream, EventStream> split_polarity(const EventStream& s) {
  EventStream pos{{}, s.width, s.height, s.t_min, s.t_max};
  EventStream neg{{}, s.width, s.height, s.t_min, s.t_max};
  for (const Event& e : s.events) (e.p > 0 ? pos : neg).events.push_back(e);
  return {std::move(pos), std::move(neg)};
}

}  // namespace esai
