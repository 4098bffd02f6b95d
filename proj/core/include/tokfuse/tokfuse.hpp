#pragma once

#include "tokfuse/backend.hpp"
#include "tokfuse/calibration.hpp"
#include "tokfuse/delay_backend.hpp"
#include "tokfuse/engine.hpp"
#include "tokfuse/errors.hpp"
#include "tokfuse/harness.hpp"
#include "tokfuse/ngram_backend.hpp"
#include "tokfuse/prob_vector.hpp"
#include "tokfuse/remote_backend.hpp"
#include "tokfuse/sampling.hpp"
#include "tokfuse/stepserver.hpp"
#include "tokfuse/table_backend.hpp"
#include "tokfuse/tokenizer.hpp"
#include "tokfuse/trace.hpp"
#include "tokfuse/vocab.hpp"
#include "tokfuse/vocab_file.hpp"
#include "tokfuse/wire.hpp"
