#pragma once

#include "kidvoice/association.hpp"
#include "kidvoice/audio.hpp"
#include "kidvoice/corpus.hpp"
#include "kidvoice/dialog.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/evaluation.hpp"
#include "kidvoice/features.hpp"
#include "kidvoice/language_model.hpp"
#include "kidvoice/pipeline.hpp"
#include "kidvoice/recognizer.hpp"
#include "kidvoice/service.hpp"
#include "kidvoice/speech_output.hpp"
#include "kidvoice/synth.hpp"
#include "kidvoice/vocabulary.hpp"
#include "kidvoice/workflow.hpp"
