#pragma once

#include "meder/checkpoint.hpp"
#include "meder/config.hpp"
#include "meder/corpus.hpp"
#include "meder/csv.hpp"
#include "meder/errors.hpp"
#include "meder/metrics.hpp"
#include "meder/model.hpp"
#include "meder/num/gradcheck.hpp"
#include "meder/num/ops.hpp"
#include "meder/num/tape.hpp"
#include "meder/num/tensor.hpp"
#include "meder/optim.hpp"
#include "meder/pairseq.hpp"
#include "meder/pipeline.hpp"
#include "meder/random.hpp"
#include "meder/report.hpp"
#include "meder/textprep.hpp"
#include "meder/tokenizer.hpp"
#include "meder/trainer.hpp"
#include "meder/unicode.hpp"
