#pragma once

#include "mmdom/construct/covering.hpp"
#include "mmdom/construct/dominator.hpp"
#include "mmdom/construct/product.hpp"
#include "mmdom/construct/scheme.hpp"
#include "mmdom/construct/transfer.hpp"
