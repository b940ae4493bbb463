#!/usr/bin/env python3
"""Regenerates data/kg.nt, the bundled DBpedia-shaped fixture graph.

A handful of named entities carry the worked examples (the Obama and Robinson
families, a royal parent chain, a founder, a composer); a seeded synthetic
population adds bulk so that retrieval cost is visible in timing runs.

Usage: python3 tools/make_fixture_kg.py > data/kg.nt
"""
import random
import sys

DBO = "http://dbpedia.org/ontology/"
DBR = "http://dbpedia.org/resource/"
GENDER = "http://xmlns.com/foaf/0.1/gender"
TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
LABEL = "http://www.w3.org/2000/01/rdf-schema#label"

triples = set()


def iri(x):
    return "<" + x + ">"


def add(s, p, o):
    triples.add((iri(s), iri(p), o))


def rel(s, p, o):
    add(DBR + s, DBO + p, iri(DBR + o))


def typ(s, t):
    add(DBR + s, TYPE, iri(DBO + t))


def gender(s, g):
    add(DBR + s, GENDER, '"%s"' % g)


def label(s, text):
    add(DBR + s, LABEL, '"%s"@en' % text)


def person(s, g, country=None):
    typ(s, "Person")
    gender(s, g)
    if country:
        rel(s, "country", country)


COUNTRIES = ["United_States", "United_Kingdom", "Germany", "France", "Switzerland",
             "Argentina", "Japan", "Kenya"]
CITIES = ["Honolulu", "Chicago", "London", "Bonn", "Paris", "Basel", "Rosario", "Osaka",
          "Nairobi", "Springfield", "Leeds", "Lyon"]
ORGS = ["Microsoft", "Acme_Corporation", "Globex", "Initech", "Umbrella_Corporation",
        "Stark_Industries", "Wayne_Enterprises", "Hooli", "Vandelay_Industries", "Cyberdyne",
        "Soylent", "Tyrell_Corporation", "Wonka_Industries", "Oscorp", "Dunder_Mifflin"]
SPORTS = ["Tennis", "Association_football", "Basketball", "Cricket", "Rowing", "Fencing"]
TEAMS = ["FC_Barcelona", "Leeds_United", "Chicago_Bulls", "Kenya_Rowing_Club"]
JOBS = ["Politician", "Composer", "Engineer", "Teacher", "Lawyer", "Nurse", "Carpenter"]
SCHOOLS = ["Columbia_University", "Princeton_University", "Harvard_University",
           "University_of_Bonn", "Sorbonne"]

for c in COUNTRIES:
    typ(c, "PopulatedPlace")
for c in CITIES:
    typ(c, "City")
for o in ORGS:
    typ(o, "Organisation")

# Obama / Robinson family. Spouse runs one way; mothers and fathers here have
# no spouse, so only the spouse-then-mother chain has instances.
person("Barack_Obama", "male", "United_States")
person("Michelle_Obama", "female", "United_States")
person("Marian_Robinson", "female", "United_States")
person("Fraser_Robinson", "male", "United_States")
person("Craig_Robinson", "male", "United_States")
rel("Barack_Obama", "spouse", "Michelle_Obama")
rel("Michelle_Obama", "mother", "Marian_Robinson")
rel("Michelle_Obama", "father", "Fraser_Robinson")
rel("Michelle_Obama", "relative", "Craig_Robinson")
rel("Barack_Obama", "birthPlace", "Honolulu")
rel("Michelle_Obama", "birthPlace", "Chicago")
rel("Barack_Obama", "almaMater", "Columbia_University")
rel("Michelle_Obama", "almaMater", "Princeton_University")
rel("Barack_Obama", "occupation", "Politician")
rel("Michelle_Obama", "residence", "Chicago")

# Royal parent chain: x parent z means z is a parent of x.
ROYALS = [("Prince_George", "male"), ("Prince_William", "male"), ("Charles_III", "male"),
          ("Elizabeth_II", "female"), ("George_VI", "male")]
for name, g in ROYALS:
    person(name, g, "United_Kingdom")
for (child, _), (parent, _) in zip(ROYALS, ROYALS[1:]):
    rel(child, "parent", parent)
    rel(parent, "child", child)
rel("Elizabeth_II", "deathPlace", "London")

person("Bill_Gates", "male", "United_States")
rel("Microsoft", "founder", "Bill_Gates")
rel("Bill_Gates", "employer", "Microsoft")

person("Ludwig_van_Beethoven", "male", "Germany")
label("Ludwig_van_Beethoven", "Ludwig van Beethoven")
rel("Ludwig_van_Beethoven", "birthPlace", "Bonn")
rel("Ludwig_van_Beethoven", "deathPlace", "Bonn")
rel("Ludwig_van_Beethoven", "occupation", "Composer")

person("Roger_Federer", "male", "Switzerland")
rel("Roger_Federer", "sport", "Tennis")
rel("Roger_Federer", "birthPlace", "Basel")
person("Lionel_Messi", "male", "Argentina")
rel("Lionel_Messi", "sport", "Association_football")
rel("Lionel_Messi", "team", "FC_Barcelona")
rel("Lionel_Messi", "birthPlace", "Rosario")

# Synthetic population: four generations with two parents each.
rng = random.Random(20240601)
GENERATIONS = [150, 300, 450, 600]
generations = []
n = 0
for size in GENERATIONS:
    gen = []
    for _ in range(size):
        n += 1
        name = "Person_%05d" % n
        g = rng.choice(["male", "female"])
        person(name, g, rng.choice(COUNTRIES))
        rel(name, "birthPlace", rng.choice(CITIES))
        if rng.random() < 0.5:
            rel(name, "residence", rng.choice(CITIES))
        if rng.random() < 0.4:
            rel(name, "employer", rng.choice(ORGS))
        if rng.random() < 0.2:
            rel(name, "sport", rng.choice(SPORTS))
        if rng.random() < 0.1:
            rel(name, "team", rng.choice(TEAMS))
        if rng.random() < 0.5:
            rel(name, "occupation", rng.choice(JOBS))
        if rng.random() < 0.3:
            rel(name, "almaMater", rng.choice(SCHOOLS))
        gen.append(name)
    if generations:
        families = {}
        for name in gen:
            parents = tuple(sorted(rng.sample(generations[-1], 2)))
            for p in parents:
                rel(name, "parent", p)
                rel(p, "child", name)
            families.setdefault(parents, []).append(name)
        for kids in families.values():
            for a in kids:
                for b in kids:
                    if a != b:
                        rel(a, "relative", b)
    generations.append(gen)

out = sys.stdout
for s, p, o in sorted(triples):
    out.write("%s %s %s .\n" % (s, p, o))
