#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "memloss/bounds.hpp"
#include "memloss/coupling.hpp"
#include "memloss/covering.hpp"
#include "memloss/map_core.hpp"

namespace memloss {

using ojson = nlohmann::ordered_json;

[[nodiscard]] ojson to_json(const BranchSpec& b);
[[nodiscard]] ojson to_json(const MapAnalysis& a);
[[nodiscard]] ojson to_json(const FamilyConstants& f);
[[nodiscard]] ojson to_json(const BoundsReport& b);
[[nodiscard]] ojson to_json(const Cylinder& c);
[[nodiscard]] ojson to_json(const CoveringReport& c);
[[nodiscard]] ojson to_json(const CurveCover& c);
[[nodiscard]] ojson to_json(const std::optional<DecayFit>& f);
[[nodiscard]] ojson to_json(const CertifyReport& c);
[[nodiscard]] ojson to_json(const BlockRecord& b);
[[nodiscard]] ojson ledger_summary(const CouplingLedger& l);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const ojson& j);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace memloss
