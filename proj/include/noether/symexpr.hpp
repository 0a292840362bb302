#pragma once

#include "noether/symexpr/expr.hpp"
#include "noether/symexpr/normalize.hpp"
#include "noether/symexpr/parse.hpp"
#include "noether/symexpr/probe.hpp"
#include "noether/symexpr/rational.hpp"
#include "noether/symexpr/space.hpp"
