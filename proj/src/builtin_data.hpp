#pragma once

namespace terra_risk::detail {

/// Contents of data/slip_classes.json, embedded at build time.
extern const char* const kBuiltinSlipClassesJson;

}  // namespace terra_risk::detail
