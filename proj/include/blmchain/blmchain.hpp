#pragma once

#include "blmchain/chain.hpp"
#include "blmchain/chain_io.hpp"
#include "blmchain/chain_validation.hpp"
#include "blmchain/continuous.hpp"
#include "blmchain/decimal.hpp"
#include "blmchain/difficulty.hpp"
#include "blmchain/error.hpp"
#include "blmchain/hash.hpp"
#include "blmchain/index_set.hpp"
#include "blmchain/problem.hpp"
#include "blmchain/random.hpp"
#include "blmchain/search.hpp"
#include "blmchain/simulator.hpp"
#include "blmchain/tsp.hpp"
#include "blmchain/validation.hpp"
