#pragma once

#include "klsh/bounds.hpp"
#include "klsh/corpus.hpp"
#include "klsh/datasets.hpp"
#include "klsh/error.hpp"
#include "klsh/hashing.hpp"
#include "klsh/kernel.hpp"
#include "klsh/report.hpp"
#include "klsh/retrieval.hpp"
#include "klsh/snapshot.hpp"
#include "klsh/spectral.hpp"
#include "klsh/sweep.hpp"
