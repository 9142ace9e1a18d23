#pragma once

#include "recsel/portfolio.hpp"

namespace recsel::impl {

Implementation pop_a();
Implementation pop_b();
Implementation itemknn_a();
Implementation itemknn_b();
Implementation bpr_a();
Implementation bpr_b();
Implementation implicitmf();
Implementation ease();
Implementation fpmc();

}  // namespace recsel::impl
