#include "editid/integration.hpp"

#include <charconv>
#include <set>

namespace editid {

int BlockId::flat() const {
  return stream == Stream::Dual ? index : BlockSet::kDualStream + index;
}

BlockId BlockId::from_flat(int flat) {
  if (flat < 0 || flat >= BlockSet::kTotal)
    throw Error(ErrorCode::InvalidInput, "block index " + std::to_string(flat) + " out of range");
  if (flat < BlockSet::kDualStream) return {Stream::Dual, flat};
  return {Stream::Single, flat - BlockSet::kDualStream};
}

std::string to_string(const BlockId& id) {
  return (id.stream == BlockId::Stream::Dual ? "dual:" : "single:") + std::to_string(id.index);
}

namespace {

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::Config, "not an integer: '" + std::string(text) + "'");
  return value;
}

void check_block(const BlockId& id) {
  const int limit = id.stream == BlockId::Stream::Dual ? BlockSet::kDualStream : BlockSet::kSingleStream;
  if (id.index < 0 || id.index >= limit)
    throw Error(ErrorCode::InvalidInput, "block " + to_string(id) + " out of range");
}

}  // namespace

BlockId parse_block_id(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return BlockId::from_flat(parse_int(text));
  const auto stream = text.substr(0, colon);
  BlockId id;
  if (stream == "dual") {
    id.stream = BlockId::Stream::Dual;
  } else if (stream == "single") {
    id.stream = BlockId::Stream::Single;
  } else {
    throw Error(ErrorCode::Config, "unknown block stream '" + std::string(stream) + "'");
  }
  id.index = parse_int(text.substr(colon + 1));
  check_block(id);
  return id;
}

BlockSet select_blocks(int k) {
  if (k < 1 || k > BlockSet::kTotal)
    throw Error(ErrorCode::InvalidInput,
                "block count must be in [1, " + std::to_string(BlockSet::kTotal) + "]");
  BlockSet set;
  for (int i = 0; i < k; ++i) {
    const int flat = k == 1 ? 0 : i * (BlockSet::kTotal - 1) / (k - 1);
    set.selected.push_back(BlockId::from_flat(flat));
  }
  return set;
}

BlockSet select_blocks(std::vector<BlockId> explicit_list) {
  std::set<int> seen;
  for (const auto& id : explicit_list) {
    check_block(id);
    if (!seen.insert(id.flat()).second)
      throw Error(ErrorCode::InvalidInput, "duplicate block " + to_string(id));
  }
  return BlockSet{std::move(explicit_list)};
}

std::string_view to_string(ReweightMethod::Kind kind) {
  switch (kind) {
    case ReweightMethod::Kind::SeededGaussianLinear: return "seeded-gaussian-linear";
    case ReweightMethod::Kind::Dct: return "dct";
    case ReweightMethod::Kind::PartialFourier: return "partial-fourier";
  }
  return "?";
}

ReweightMethod::Kind parse_reweight_kind(std::string_view text) {
  if (text == "seeded-gaussian-linear" || text == "randn-linear")
    return ReweightMethod::Kind::SeededGaussianLinear;
  if (text == "dct") return ReweightMethod::Kind::Dct;
  if (text == "partial-fourier") return ReweightMethod::Kind::PartialFourier;
  throw Error(ErrorCode::Config, "unknown reweight method '" + std::string(text) + "'");
}

std::string_view to_string(FusionMethod::Kind kind) {
  switch (kind) {
    case FusionMethod::Kind::Weight: return "weight";
    case FusionMethod::Kind::Dropout: return "dropout";
    case FusionMethod::Kind::Concat: return "concat";
    case FusionMethod::Kind::Sum: return "sum";
    case FusionMethod::Kind::Multiply: return "multiply";
    case FusionMethod::Kind::Max: return "max";
  }
  return "?";
}

FusionMethod::Kind parse_fusion_kind(std::string_view text) {
  for (auto kind : {FusionMethod::Kind::Weight, FusionMethod::Kind::Dropout, FusionMethod::Kind::Concat,
                    FusionMethod::Kind::Sum, FusionMethod::Kind::Multiply, FusionMethod::Kind::Max})
    if (text == to_string(kind)) return kind;
  throw Error(ErrorCode::Config, "unknown fusion method '" + std::string(text) + "'");
}

void FusionMethod::validate() const {
  if (kind == Kind::Weight) {
    if (!weights) throw Error(ErrorCode::Config, "weight fusion needs a weight pair");
    if (!std::isfinite(weights->first) || !std::isfinite(weights->second))
      throw Error(ErrorCode::Config, "weight pair must be finite");
  }
  if (kind == Kind::Dropout && !(drop_rate >= 0.0 && drop_rate < 1.0))
    throw Error(ErrorCode::Config, "dropout rate must be in [0,1)");
}

void StrengthSchedule::validate() const {
  if (!(base >= 0.0) || !std::isfinite(base))
    throw Error(ErrorCode::Config, "strength base must be finite and >= 0");
  if (kind == Kind::EarlyBoost) {
    if (!(boost >= 0.0) || !std::isfinite(boost))
      throw Error(ErrorCode::Config, "strength boost must be finite and >= 0");
    if (!(boost_until_fraction >= 0.0 && boost_until_fraction <= 1.0))
      throw Error(ErrorCode::Config, "boost_until_fraction must be in [0,1]");
  }
}

Real strength_at(int step, int total_steps, const StrengthSchedule& schedule) {
  if (total_steps < 1 || step < 0 || step >= total_steps)
    throw Error(ErrorCode::InvalidInput, "step " + std::to_string(step) + " outside [0, " +
                                             std::to_string(total_steps) + ")");
  schedule.validate();
  if (schedule.kind == StrengthSchedule::Kind::EarlyBoost &&
      static_cast<Real>(step) / total_steps < schedule.boost_until_fraction)
    return schedule.base + schedule.boost;
  return schedule.base;
}

void IntegrationConfig::validate(int token_dim) const {
  for (const auto& id : blocks.selected) check_block(id);
  if (reweight.kind != ReweightMethod::Kind::SeededGaussianLinear && reweight.target_dim > token_dim)
    throw Error(ErrorCode::Config, "reweight target_dim exceeds token width");
  fusion.validate();
  schedule.validate();
}

}  // namespace editid
