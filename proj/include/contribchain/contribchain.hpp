#pragma once

// Umbrella include for the whole library.

#include "contribchain/address.hpp"
#include "contribchain/authmap.hpp"
#include "contribchain/blocks.hpp"
#include "contribchain/config.hpp"
#include "contribchain/contribution.hpp"
#include "contribchain/experiment.hpp"
#include "contribchain/metrics.hpp"
#include "contribchain/nacv.hpp"
#include "contribchain/plouvain.hpp"
#include "contribchain/rng.hpp"
#include "contribchain/security.hpp"
#include "contribchain/sha256.hpp"
#include "contribchain/sim.hpp"
#include "contribchain/txgraph.hpp"
#include "contribchain/types.hpp"
#include "contribchain/workload.hpp"
