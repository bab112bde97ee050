#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>

#include "esai/esai.hpp"

using namespace esai;
namespace fs = std::filesystem;

namespace {

EventStream random_stream(int width, int height, int64_t t_span_us, size_t count, uint64_t seed) {
  Rng rng(seed);
  EventStream s;
  s.width = width;
  s.height = height;
  s.t_min = 0;
  s.t_max = t_span_us;
  std::vector<int64_t> times(count);
  for (auto& t : times) t = static_cast<int64_t>(rng.next_u64() % (t_span_us + 1));
  std::sort(times.begin(), times.end());
  for (int64_t t : times) {
    Event e;
    e.t = t;
    e.x = static_cast<int>(rng.next_u64() % width);
    e.y = static_cast<int>(rng.next_u64() % height);
    e.p = rng.coin() ? 1 : -1;
    s.events.push_back(e);
  }
  return s;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("esai_core_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetSample tiny_sample() {
  DatasetSample s;
  s.v = 0.177;
  s.fx = 320.0;
  s.height = 16;
  s.width = 20;
  s.depth = 0.6;
  s.events = random_stream(20, 16, 700000, 200, 99);
  for (int i = 0; i < 3; ++i) {
    GrayImage f(16, 20);
    for (size_t j = 0; j < f.v.size(); ++j) f.v[j] = ((j + i) % 256) / 255.0;
    s.occ_aps.push_back(f);
    s.occ_aps_ts.push_back(i * 300000);
  }
  s.occ_free_aps = GrayImage(16, 20, 128 / 255.0);
  s.occ_free_aps_ts = 350000;
  return s;
}

}  // namespace

TEST_CASE("stack_events places events into equal-width bins") {
  SECTION("empty stream gives an all-zero stack") {
    EventStream s;
    s.width = 20;
    s.height = 10;
    s.t_max = 1000;
    const FrameStack st = stack_events(s, 30, {0, 1000});
    REQUIRE(st.n == 30);
    REQUIRE(st.h == 10);
    REQUIRE(st.w == 20);
    REQUIRE(st.t_edges.size() == 31);
    for (double v : st.data) REQUIRE(v == 0.0);
  }

  SECTION("single event lands in its interval and polarity channel") {
    EventStream s;
    s.width = 10;
    s.height = 10;
    s.t_min = 0;
    s.t_max = 3000;
    // interval width 100us; midway through interval 3 is t=350
    s.events.push_back({350, 5, 7, 1});
    const FrameStack st = stack_events(s, 30, {0, 3000});
    double total = 0.0;
    for (double v : st.data) total += v;
    REQUIRE(total == 1.0);
    REQUIRE(st.at(3, 0, 7, 5) == 1.0);
  }

  SECTION("bin assignment matches a brute-force oracle on 10k random events") {
    const EventStream s = random_stream(32, 24, 700001, 10000, 42);
    const int n = 30;
    const FrameStack st = stack_events(s, n, {0, 700001});

    // independent oracle: exact rational comparison of t against the edges
    // k*(t1-t0)/n, half-open bins with an inclusive final edge
    std::map<std::tuple<int, int, int, int>, double> oracle;
    for (const Event& e : s.events) {
      int bin = -1;
      for (int k = 0; k < n; ++k) {
        const bool ge_lo = e.t * static_cast<int64_t>(n) >= static_cast<int64_t>(k) * 700001;
        const bool lt_hi = e.t * static_cast<int64_t>(n) < static_cast<int64_t>(k + 1) * 700001;
        if (ge_lo && (lt_hi || (k == n - 1 && e.t <= 700001))) {
          bin = k;
          break;
        }
      }
      REQUIRE(bin >= 0);
      oracle[{bin, e.p > 0 ? 0 : 1, e.y, e.x}] += 1.0;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      for (int pol = 0; pol < 2; ++pol)
        for (int y = 0; y < 24; ++y)
          for (int x = 0; x < 32; ++x) {
            const auto it = oracle.find({i, pol, y, x});
            const double want = it == oracle.end() ? 0.0 : it->second;
            REQUIRE(st.at(i, pol, y, x) == want);
            total += st.at(i, pol, y, x);
          }
    REQUIRE(total == 10000.0);
  }

  SECTION("edges are strictly increasing and the window endpoint is kept") {
    EventStream s;
    s.width = 4;
    s.height = 4;
    s.t_max = 999;
    s.events.push_back({999, 1, 1, -1});
    const FrameStack st = stack_events(s, 7, {0, 999});
    for (size_t i = 1; i < st.t_edges.size(); ++i) REQUIRE(st.t_edges[i] > st.t_edges[i - 1]);
    REQUIRE(st.at(6, 1, 1, 1) == 1.0);
  }

  SECTION("rejects bad arguments") {
    EventStream s;
    s.width = 4;
    s.height = 4;
    REQUIRE_THROWS_AS(stack_events(s, 0, {0, 10}), InvalidArgument);
    REQUIRE_THROWS_AS(stack_events(s, 5, {10, 10}), InvalidArgument);
    REQUIRE_THROWS_AS(stack_events(s, 5, {20, 10}), InvalidArgument);
  }
}

TEST_CASE("stack_events agrees with accumulation") {
  const EventStream s = random_stream(16, 12, 100000, 3000, 7);

  SECTION("N=1 equals the per-polarity accumulation images") {
    const FrameStack st = stack_events(s, 1, {0, 100000});
    const auto [pos, neg] = split_polarity(s);
    const GrayImage acc_pos = accumulate(pos, 12, 16, Voting::nearest);
    const GrayImage acc_neg = accumulate(neg, 12, 16, Voting::nearest);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 16; ++x) {
        REQUIRE(st.at(0, 0, y, x) == acc_pos.at(y, x));
        REQUIRE(st.at(0, 1, y, x) == acc_neg.at(y, x));
      }
  }

  SECTION("summing over interval and polarity equals accumulate for any N") {
    for (int n : {2, 5, 17}) {
      const FrameStack st = stack_events(s, n, {0, 100000});
      const GrayImage acc = accumulate(s, 12, 16, Voting::nearest);
      for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
          double sum = 0.0;
          for (int i = 0; i < n; ++i) sum += st.at(i, 0, y, x) + st.at(i, 1, y, x);
          REQUIRE(sum == acc.at(y, x));
        }
    }
  }
}

TEST_CASE("split_polarity partitions while preserving order") {
  SECTION("all-positive stream") {
    EventStream s = random_stream(8, 8, 1000, 50, 3);
    for (Event& e : s.events) e.p = 1;
    const auto [pos, neg] = split_polarity(s);
    REQUIRE(pos.events.size() == 50);
    REQUIRE(neg.events.empty());
  }

  SECTION("empty stream") {
    EventStream s;
    const auto [pos, neg] = split_polarity(s);
    REQUIRE(pos.events.empty());
    REQUIRE(neg.events.empty());
  }

  SECTION("mixed stream matches a brute-force partition") {
    const EventStream s = random_stream(8, 8, 5000, 100, 11);
    const auto [pos, neg] = split_polarity(s);
    REQUIRE(pos.events.size() + neg.events.size() == 100);
    std::vector<Event> want_pos, want_neg;
    for (const Event& e : s.events) (e.p > 0 ? want_pos : want_neg).push_back(e);
    REQUIRE(pos.events.size() == want_pos.size());
    for (size_t i = 0; i < want_pos.size(); ++i) {
      REQUIRE(pos.events[i].t == want_pos[i].t);
      REQUIRE(pos.events[i].x == want_pos[i].x);
      REQUIRE(pos.events[i].y == want_pos[i].y);
      REQUIRE(pos.events[i].p == 1);
    }
    for (size_t i = 0; i < want_neg.size(); ++i) {
      REQUIRE(neg.events[i].t == want_neg[i].t);
      REQUIRE(neg.events[i].p == -1);
    }
    for (size_t i = 1; i < pos.events.size(); ++i)
      REQUIRE(pos.events[i].t >= pos.events[i - 1].t);
  }
}

TEST_CASE("event file round trips") {
  const fs::path dir = temp_dir("io");

  SECTION("csv and binary round-trip identity on randomized streams") {
    for (uint64_t seed = 0; seed < 1000; ++seed) {
      const EventStream s =
          random_stream(16, 12, 1 + static_cast<int64_t>(seed % 900), seed % 40, seed);
      const std::string base = (dir / ("s" + std::to_string(seed))).string();
      write_events(s, base + ".csv", EventFormat::csv);
      write_events(s, base + ".bin", EventFormat::bin);
      const EventStream r_csv = read_events_csv(base + ".csv", 16, 12);
      const EventStream r_bin = read_events(base + ".bin", EventFormat::bin);
      REQUIRE(r_csv.events.size() == s.events.size());
      REQUIRE(r_bin.events.size() == s.events.size());
      for (size_t i = 0; i < s.events.size(); ++i) {
        for (const EventStream* r : {&r_csv, &r_bin}) {
          REQUIRE(r->events[i].t == s.events[i].t);
          REQUIRE(r->events[i].x == s.events[i].x);
          REQUIRE(r->events[i].y == s.events[i].y);
          REQUIRE(r->events[i].p == s.events[i].p);
        }
      }
      REQUIRE(r_bin.width == 16);
      REQUIRE(r_bin.height == 12);
      fs::remove(base + ".csv");
      fs::remove(base + ".bin");
    }
  }

  SECTION("1k-event stream survives bit-identically") {
    const EventStream s = random_stream(346, 260, 700000, 1000, 1234);
    write_events(s, (dir / "big.bin").string(), EventFormat::bin);
    const EventStream r = read_events((dir / "big.bin").string(), EventFormat::bin);
    REQUIRE(r.events.size() == 1000);
    for (size_t i = 0; i < 1000; ++i) {
      REQUIRE(r.events[i].t == s.events[i].t);
      REQUIRE(r.events[i].x == s.events[i].x);
      REQUIRE(r.events[i].y == s.events[i].y);
      REQUIRE(r.events[i].p == s.events[i].p);
    }
  }

  SECTION("csv with zero polarity is rejected with its line number") {
    const std::string path = (dir / "bad.csv").string();
    std::ofstream(path) << "t,x,y,p\n100,1,1,1\n200,2,2,0\n";
    try {
      read_events_csv(path);
      FAIL("expected parse error");
    } catch (const DataError& e) {
      REQUIRE(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  SECTION("truncated binary reports the byte offset") {
    const EventStream s = random_stream(8, 8, 1000, 5, 5);
    const std::string path = (dir / "trunc.bin").string();
    write_events(s, path, EventFormat::bin);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 7);  // cut into the last record
    try {
      read_events(path, EventFormat::bin);
      FAIL("expected truncation error");
    } catch (const DataError& e) {
      REQUIRE(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }

  SECTION("unsorted and out-of-range records are rejected with the event index") {
    const std::string path = (dir / "unsorted.csv").string();
    std::ofstream(path) << "t,x,y,p\n200,1,1,1\n100,2,2,1\n";
    REQUIRE_THROWS_AS(read_events_csv(path), DataError);

    const std::string path2 = (dir / "range.csv").string();
    std::ofstream(path2) << "t,x,y,p\n100,1,1,1\n200,9,2,1\n";
    try {
      read_events_csv(path2, 4, 4);
      FAIL("expected range error");
    } catch (const DataError& e) {
      REQUIRE(std::string(e.what()).find("event 1") != std::string::npos);
    }
  }
}

TEST_CASE("dataset sample bundles") {
  SECTION("save then load reproduces every field") {
    const fs::path dir = temp_dir("sample_rt");
    const DatasetSample s = tiny_sample();
    save_sample(s, dir.string());
    const DatasetSample r = load_sample(dir.string());
    REQUIRE(r.v == 0.177);
    REQUIRE(r.fx == 320.0);
    REQUIRE(r.height == 16);
    REQUIRE(r.width == 20);
    REQUIRE(r.depth == 0.6);
    REQUIRE(r.t_offset_us == 0);
    REQUIRE(r.events.events.size() == s.events.events.size());
    for (size_t i = 0; i < s.events.events.size(); ++i) {
      REQUIRE(r.events.events[i].t == s.events.events[i].t);
      REQUIRE(r.events.events[i].x == s.events.events[i].x);
    }
    REQUIRE(r.occ_aps.size() == 3);
    REQUIRE(r.occ_aps_ts == s.occ_aps_ts);
    REQUIRE(r.occ_free_aps_ts == s.occ_free_aps_ts);
    // frames were 8-bit aligned to begin with, so pixels survive exactly
    for (size_t i = 0; i < r.occ_free_aps.v.size(); ++i)
      REQUIRE(r.occ_free_aps.v[i] == Catch::Approx(s.occ_free_aps.v[i]).margin(1e-12));
  }

  SECTION("paper-style metadata is reproduced exactly") {
    const fs::path dir = temp_dir("sample_meta");
    DatasetSample s = tiny_sample();
    s.height = 260;
    s.width = 346;
    s.events = random_stream(346, 260, 700000, 100, 3);
    s.occ_aps.clear();
    s.occ_aps_ts.clear();
    for (int i = 0; i < 2; ++i) {
      s.occ_aps.emplace_back(260, 346, 0.5);
      s.occ_aps_ts.push_back(i * 400000);
    }
    s.occ_free_aps = GrayImage(260, 346, 0.5);
    save_sample(s, dir.string());
    const DatasetSample r = load_sample(dir.string());
    REQUIRE(r.v == 0.177);
    REQUIRE(r.height == 260);
    REQUIRE(r.width == 346);
    REQUIRE(r.depth == 0.6);
  }

  SECTION("missing occlusion-free frame is named") {
    const fs::path dir = temp_dir("sample_missing");
    save_sample(tiny_sample(), dir.string());
    fs::remove(dir / "occ_free_aps.pgm");
    try {
      load_sample(dir.string());
      FAIL("expected missing-key error");
    } catch (const DataError& e) {
      REQUIRE(std::string(e.what()).find("missing key: occ_free_aps") != std::string::npos);
    }
  }

  SECTION("frame size mismatch is detected") {
    const fs::path dir = temp_dir("sample_mismatch");
    DatasetSample s = tiny_sample();
    save_sample(s, dir.string());
    write_pgm(GrayImage(4, 4, 0.0), (dir / "occ_free_aps.pgm").string());
    REQUIRE_THROWS_AS(load_sample(dir.string()), DataError);
  }

  SECTION("absolute clocks are re-zeroed and the offset recorded") {
    const fs::path dir = temp_dir("sample_offset");
    DatasetSample s = tiny_sample();
    const int64_t off = 1600000000000000;
    for (Event& e : s.events.events) e.t += off;
    s.events.t_min += off;
    s.events.t_max += off;
    for (auto& t : s.occ_aps_ts) t += off;
    s.occ_free_aps_ts += off;
    save_sample(s, dir.string());
    const DatasetSample r = load_sample(dir.string());
    REQUIRE(r.t_offset_us == off);
    REQUIRE(r.occ_aps_ts.front() == 0);
    REQUIRE(r.events.events.front().t == tiny_sample().events.events.front().t);
  }
}

TEST_CASE("normalize_minmax") {
  SECTION("three-level image maps to 0, 0.5, 1") {
    GrayImage img(1, 3);
    img.v = {0.0, 2.0, 4.0};
    const GrayImage out = normalize_minmax(img);
    REQUIRE(out.v[0] == 0.0);
    REQUIRE(out.v[1] == 0.5);
    REQUIRE(out.v[2] == 1.0);
  }

  SECTION("constant image maps to zeros") {
    const GrayImage out = normalize_minmax(GrayImage(5, 4, 7.0));
    for (double v : out.v) REQUIRE(v == 0.0);
  }

  SECTION("random image attains 0 and 1 at the brute-force extrema") {
    Rng rng(21);
    GrayImage img(9, 7);
    for (double& v : img.v) v = rng.uniform(-3.0, 5.0);
    double mn = img.v[0], mx = img.v[0];
    for (double v : img.v) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    const GrayImage out = normalize_minmax(img);
    double omn = 1e9, omx = -1e9;
    for (double v : out.v) {
      omn = std::min(omn, v);
      omx = std::max(omx, v);
    }
    REQUIRE(omn == 0.0);
    REQUIRE(omx == 1.0);
    for (size_t i = 0; i < img.v.size(); ++i)
      REQUIRE(out.v[i] == Catch::Approx((img.v[i] - mn) / (mx - mn)).margin(1e-12));
  }
}

TEST_CASE("stream validation enforces the invariants") {
  EventStream s;
  s.width = 4;
  s.height = 4;
  s.t_max = 100;
  s.events.push_back({10, 1, 1, 2});
  REQUIRE_THROWS_AS(validate_stream(s), DataError);
  s.events[0].p = 1;
  REQUIRE_NOTHROW(validate_stream(s));
  s.events.push_back({5, 1, 1, 1});
  REQUIRE_THROWS_AS(validate_stream(s), DataError);
}
