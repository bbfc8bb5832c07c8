#include "gtakit/attn.hpp"

namespace gtakit {

Representation rpe_bias_rep(const So3Rotation& r) {
  RepSpec spec = RepSpec::make(
      {RepBlockSpec::rot(1), RepBlockSpec::rot(1), RepBlockSpec::rot(1)});
  Representation rep;
  rep.spec = std::move(spec);
  rep.blocks = {r.r, r.r, r.r};
  rep.offsets = {0, 3, 6};
  return rep;
}

}  // namespace gtakit
