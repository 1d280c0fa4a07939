#ifndef GWTREE_GWTREE_HPP
#define GWTREE_GWTREE_HPP

#include "analytic.hpp"
#include "domination.hpp"
#include "estimate.hpp"
#include "random.hpp"
#include "samplers.hpp"
#include "spanning.hpp"
#include "tree.hpp"
#include "walk.hpp"

namespace gwtree {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // GWTREE_GWTREE_HPP
