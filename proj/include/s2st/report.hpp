// Copyright (c) 2026 The s2st Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Isochrony metrics report.
//
// Text form, one key=value per line:
//   pairs=<n>
//   slc_0.2=<fraction>
//   slc_0.4=<fraction>
//   pause_src_total=<count>        (only when VAD tracks are present)
//   pause_gen_total=<count>
//
// JSON form (schema "s2st.metrics/1"):
//   {"schema": "s2st.metrics/1", "pairs": n, "slc_0.2": x, "slc_0.4": y,
//    "items": [{"src_duration": s, "gen_duration": g,
//               "src_pauses": a | null, "gen_pauses": b | null}, ...]}

#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2st/isochrony.hpp"

namespace s2st {

inline constexpr const char* kMetricsSchema = "s2st.metrics/1";

struct MetricsItem {
  double src_duration = 0.0;
  double gen_duration = 0.0;
  std::optional<std::size_t> src_pauses;
  std::optional<std::size_t> gen_pauses;

  friend bool operator==(const MetricsItem&, const MetricsItem&) = default;
};

struct MetricsReport {
  std::vector<MetricsItem> items;
  double slc_02 = 0.0;
  double slc_04 = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport compute_metrics(std::vector<MetricsItem> items) {
  MetricsReport r;
  std::vector<double> src, gen;
  for (const auto& it : items) {
    src.push_back(it.src_duration);
    gen.push_back(it.gen_duration);
  }
  r.slc_02 = slc(src, gen, 0.2);
  r.slc_04 = slc(src, gen, 0.4);
  r.items = std::move(items);
  return r;
}

inline std::string metrics_to_text(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "pairs=" << r.items.size() << '\n';
  os << "slc_0.2=" << r.slc_02 << '\n';
  os << "slc_0.4=" << r.slc_04 << '\n';
  std::size_t src_total = 0, gen_total = 0;
  bool any = false;
  for (const auto& it : r.items) {
    if (it.src_pauses) src_total += *it.src_pauses, any = true;
    if (it.gen_pauses) gen_total += *it.gen_pauses, any = true;
  }
  if (any) {
    os << "pause_src_total=" << src_total << '\n';
    os << "pause_gen_total=" << gen_total << '\n';
  }
  return os.str();
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["schema"] = kMetricsSchema;
  j["pairs"] = r.items.size();
  j["slc_0.2"] = r.slc_02;
  j["slc_0.4"] = r.slc_04;
  j["items"] = nlohmann::json::array();
  for (const auto& it : r.items) {
    nlohmann::json e;
    e["src_duration"] = it.src_duration;
    e["gen_duration"] = it.gen_duration;
    e["src_pauses"] = it.src_pauses ? nlohmann::json(*it.src_pauses) : nlohmann::json(nullptr);
    e["gen_pauses"] = it.gen_pauses ? nlohmann::json(*it.gen_pauses) : nlohmann::json(nullptr);
    j["items"].push_back(std::move(e));
  }
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  detail::require(j.at("schema").get<std::string>() == kMetricsSchema, "metrics report: unknown schema");
  MetricsReport r;
  r.slc_02 = j.at("slc_0.2").get<double>();
  r.slc_04 = j.at("slc_0.4").get<double>();
  for (const auto& e : j.at("items")) {
    MetricsItem it;
    it.src_duration = e.at("src_duration").get<double>();
    it.gen_duration = e.at("gen_duration").get<double>();
    if (!e.at("src_pauses").is_null()) it.src_pauses = e.at("src_pauses").get<std::size_t>();
    if (!e.at("gen_pauses").is_null()) it.gen_pauses = e.at("gen_pauses").get<std::size_t>();
    r.items.push_back(it);
  }
  detail::require(j.at("pairs").get<std::size_t>() == r.items.size(), "metrics report: pair count mismatch");
  return r;
}

}  // namespace s2st
