#pragma once

#include <string>

#include "editid/backends.hpp"
#include "editid/flow.hpp"
#include "editid/fusion.hpp"
#include "editid/integration.hpp"

namespace editid {

/// ID branch output handed to the generator: the fused edit feature and how
/// to inject it.
struct IdConditioning {
  EditFeature edit;
  IntegrationConfig integration;
};

struct GenerationRequest {
  std::string prompt;
  std::uint64_t seed = 0;
  SamplerSettings sampler{};
  const IdConditioning* id = nullptr;  // null: plain text-to-image
};

class ImageGenerator : public virtual Backend {
 public:
  virtual ImageBuffer generate(const GenerationRequest& request) const = 0;
};

}  // namespace editid
