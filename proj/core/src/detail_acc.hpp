// Extended-precision accumulators shared between energy.cpp and minimize.cpp.
// The line search compares merit values whose true differences sit far below
// 1 ulp of the double-rounded energy: a late descent step gains ~ ||r||^2 /
// sigma, which at large lambda (|E| ~ 1e3, M ~ 4e3) is smaller than the
// roundoff of a long double sum over the grid. Products of doubles are exact
// in IEEE binary128, so quad accumulation leaves the comparison limited only
// by the 1e-34 epsilon of the final additions.
#pragma once

#include "lwsw/energy.hpp"

namespace lwsw::detail {

#if defined(__SIZEOF_FLOAT128__)
using acc_t = __float128;
#else
using acc_t = long double;
#endif

acc_t energy_acc(const Profile& p, const CouplingParams& cp);
acc_t constraint_acc(const Profile& p, const CouplingParams& cp);

} // namespace lwsw::detail
