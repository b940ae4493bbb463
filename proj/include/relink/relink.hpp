#ifndef RELINK_RELINK_HPP
#define RELINK_RELINK_HPP

// Everything except the HTTP provider, which pulls in cpp-httplib.
#include "relink/assembler.hpp"
#include "relink/classifier.hpp"
#include "relink/evaluation.hpp"
#include "relink/explainer.hpp"
#include "relink/iri.hpp"
#include "relink/kg_store.hpp"
#include "relink/meta_pattern.hpp"
#include "relink/pattern_kind.hpp"
#include "relink/phrase_linker.hpp"
#include "relink/text.hpp"

#endif
