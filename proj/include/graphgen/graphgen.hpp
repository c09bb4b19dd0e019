#pragma once

#include "graphgen/error.hpp"
#include "graphgen/query.hpp"
#include "graphgen/store.hpp"
#include "graphgen/dsl.hpp"
#include "graphgen/graph.hpp"
#include "graphgen/io.hpp"
#include "graphgen/extract.hpp"
#include "graphgen/dedup.hpp"
#include "graphgen/engine.hpp"
#include "graphgen/synth.hpp"
