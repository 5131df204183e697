// Binary field dumps: one JSON header line {"M":..,"L":..,"kind":"real"|"complex"}
// terminated by '\n', then M (real) or 2M (complex, interleaved re/im)
// little-endian IEEE doubles. Round trips are bit exact.
#pragma once

#include <string>

#include "grid.hpp"

namespace lwsw {

void dump_field(const std::string& path, const RealField& f);
void dump_field(const std::string& path, const ComplexField& f);

enum class FieldKind { real, complex };

// Reads just the header line.
FieldKind probe_field(const std::string& path);

RealField load_real_field(const std::string& path);
ComplexField load_complex_field(const std::string& path);

} // namespace lwsw
