// Test plugin: a face embedder that returns a constant vector whose width
// comes from the descriptor.

#include "editid/backends.hpp"

namespace {

class ConstantEmbedder : public editid::FaceEmbedder {
 public:
  ConstantEmbedder(int dim, double value) : dim_(dim), value_(value) {}
  editid::VectorX embed(const editid::ImageBuffer&) const override {
    return editid::VectorX::Constant(dim_, value_);
  }

 private:
  int dim_;
  double value_;
};

}  // namespace

extern "C" editid::Backend* make_constant_embedder(const editid::BackendDescriptor* d) {
  return new ConstantEmbedder(d->dim("embedding"), static_cast<double>(d->seed.value_or(1)));
}

extern "C" editid::Backend* make_nothing(const editid::BackendDescriptor*) { return nullptr; }
