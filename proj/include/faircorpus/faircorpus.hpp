#pragma once

// Convenience umbrella for the whole library.

#include "faircorpus/error.hpp"
#include "faircorpus/fairness.hpp"
#include "faircorpus/harness.hpp"
#include "faircorpus/ingest.hpp"
#include "faircorpus/learn.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/profile.hpp"
#include "faircorpus/rng.hpp"
#include "faircorpus/select.hpp"
#include "faircorpus/table.hpp"
#include "faircorpus/transform.hpp"
#include "faircorpus/zipfile.hpp"
